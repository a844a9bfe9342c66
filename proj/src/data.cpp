#include "drboost/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "drboost/common.hpp"
#include "json.hpp"

namespace drboost {

using ordered_json = nlohmann::ordered_json;

void Corpus::add(Passage passage) {
  if (passage.id.empty())
    throw ValidationError("passage with empty id");
  if (passage.text.empty() && passage.title.empty())
    throw ValidationError("passage " + passage.id + " has empty title and text");
  if (rows_.count(passage.id))
    throw ValidationError("duplicate passage id \"" + passage.id + "\"");
  rows_.emplace(passage.id, passages_.size());
  passages_.push_back(std::move(passage));
}

std::optional<std::size_t> Corpus::find(const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

std::size_t Corpus::row_of(const std::string& id) const {
  auto row = find(id);
  if (!row) throw ValidationError("unknown passage id \"" + id + "\"");
  return *row;
}

AugmentedExample make_augmented(TrainPair pair,
                                std::vector<std::string> negatives) {
  if (negatives.empty())
    throw ValidationError("example " + pair.query_id + " has no negatives");
  for (const auto& neg : negatives) {
    if (std::find(pair.positive_ids.begin(), pair.positive_ids.end(), neg) !=
        pair.positive_ids.end())
      throw ValidationError("example " + pair.query_id +
                            ": negative \"" + neg + "\" is a positive");
  }
  return AugmentedExample(std::move(pair), std::move(negatives));
}

namespace {

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

std::string where(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no);
}

ordered_json parse_object(const std::string& line, const std::string& path,
                          std::size_t line_no,
                          const std::set<std::string>& keys) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(where(path, line_no) + ": malformed JSON: " + e.what());
  }
  if (!obj.is_object())
    throw ParseError(where(path, line_no) + ": expected a JSON object");
  std::set<std::string> seen;
  for (auto it = obj.begin(); it != obj.end(); ++it) seen.insert(it.key());
  if (seen != keys) {
    std::string expected;
    for (const auto& k : keys) expected += (expected.empty() ? "" : ",") + k;
    throw ParseError(where(path, line_no) + ": expected keys {" + expected + "}");
  }
  return obj;
}

std::string string_field(const ordered_json& obj, const char* key,
                         const std::string& path, std::size_t line_no) {
  const auto& v = obj.at(key);
  if (!v.is_string())
    throw ParseError(where(path, line_no) + ": field \"" + key +
                     "\" must be a string");
  return v.get<std::string>();
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    fn(line, line_no);
  }
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

std::string corpus_line(const Passage& passage) {
  ordered_json obj;
  obj["id"] = passage.id;
  obj["title"] = passage.title;
  obj["text"] = passage.text;
  return obj.dump();
}

Corpus load_corpus(const std::string& path) {
  static const std::set<std::string> keys{"id", "title", "text"};
  Corpus corpus;
  for_each_line(path, [&](const std::string& line, std::size_t line_no) {
    auto obj = parse_object(line, path, line_no, keys);
    Passage p{string_field(obj, "id", path, line_no),
              string_field(obj, "title", path, line_no),
              string_field(obj, "text", path, line_no)};
    try {
      corpus.add(std::move(p));
    } catch (const ValidationError& e) {
      throw ValidationError(where(path, line_no) + ": " + e.what());
    }
  });
  return corpus;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::vector<std::string> lines;
  lines.reserve(corpus.size());
  for (const auto& p : corpus.passages()) lines.push_back(corpus_line(p));
  write_lines(path, lines);
}

std::vector<TrainPair> load_train_pairs(const std::string& path) {
  static const std::set<std::string> keys{"query_id", "query_text",
                                          "positive_ids"};
  std::vector<TrainPair> pairs;
  std::set<std::string> seen;
  for_each_line(path, [&](const std::string& line, std::size_t line_no) {
    auto obj = parse_object(line, path, line_no, keys);
    TrainPair pair;
    pair.query_id = string_field(obj, "query_id", path, line_no);
    pair.query_text = string_field(obj, "query_text", path, line_no);
    const auto& pos = obj.at("positive_ids");
    if (!pos.is_array() || pos.empty())
      throw ParseError(where(path, line_no) +
                       ": positive_ids must be a non-empty array");
    for (const auto& id : pos) {
      if (!id.is_string())
        throw ParseError(where(path, line_no) + ": positive id must be a string");
      pair.positive_ids.push_back(id.get<std::string>());
    }
    if (pair.query_id.empty())
      throw ValidationError(where(path, line_no) + ": empty query_id");
    if (!seen.insert(pair.query_id).second)
      throw ValidationError(where(path, line_no) + ": duplicate query_id \"" +
                            pair.query_id + "\"");
    pairs.push_back(std::move(pair));
  });
  return pairs;
}

std::vector<TrainPair> load_train_pairs(const std::string& path,
                                        const Corpus& corpus) {
  auto pairs = load_train_pairs(path);
  for (const auto& pair : pairs) {
    for (const auto& id : pair.positive_ids) {
      if (!corpus.contains(id))
        throw ValidationError("query \"" + pair.query_id +
                              "\": positive passage \"" + id +
                              "\" not in corpus");
    }
  }
  return pairs;
}

void save_train_pairs(const std::string& path,
                      const std::vector<TrainPair>& pairs) {
  std::vector<std::string> lines;
  lines.reserve(pairs.size());
  for (const auto& p : pairs) {
    ordered_json obj;
    obj["query_id"] = p.query_id;
    obj["query_text"] = p.query_text;
    obj["positive_ids"] = p.positive_ids;
    lines.push_back(obj.dump());
  }
  write_lines(path, lines);
}

Qrels load_qrels(const std::string& path) {
  Qrels qrels;
  for_each_line(path, [&](const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 3)
      throw ParseError(where(path, line_no) + ": expected 3 tab-separated fields");
    int rel = 0;
    try {
      std::size_t used = 0;
      rel = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(where(path, line_no) + ": relevance must be an integer");
    }
    if (rel < 1)
      throw ValidationError(where(path, line_no) + ": relevance must be >= 1");
    qrels[fields[0]][fields[1]] = rel;
  });
  return qrels;
}

void save_qrels(const std::string& path, const Qrels& qrels) {
  std::vector<std::string> lines;
  for (const auto& [qid, docs] : qrels)
    for (const auto& [pid, rel] : docs)
      lines.push_back(qid + "\t" + pid + "\t" + std::to_string(rel));
  write_lines(path, lines);
}

Qrels qrels_from_pairs(const std::vector<TrainPair>& pairs) {
  Qrels q;
  for (const auto& p : pairs)
    for (const auto& id : p.positive_ids) q[p.query_id][id] = 1;
  return q;
}

std::pair<std::vector<TrainPair>, std::vector<TrainPair>> split_dev(
    const std::vector<TrainPair>& pairs, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ArgumentError("split_dev: fraction must lie in (0, 1)");
  const std::size_t n = pairs.size();
  std::size_t dev_count =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n >= 2) dev_count = std::clamp<std::size_t>(dev_count, 1, n - 1);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> is_dev(n, false);
  for (std::size_t i = 0; i < dev_count && i < n; ++i) is_dev[order[i]] = true;

  std::vector<TrainPair> train, dev;
  for (std::size_t i = 0; i < n; ++i)
    (is_dev[i] ? dev : train).push_back(pairs[i]);
  return {std::move(train), std::move(dev)};
}

}  // namespace drboost
