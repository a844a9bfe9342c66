// drboost: command-line front end for the boosted dense retrieval pipeline.
//
//   gen      synthetic dataset          train    boost | iterative | bagging
//   embed    passage matrix             index    exact | ivf | pq
//   search   top-k per query            eval     R@K / MRR@10 / NDCG@10
//   sweep    IVF n_probes sweep         margins  top-k margin quantiles
//   distill  single query encoder
//
// Precedence: command-line flags > --config file (TOML/INI, one [section]
// per subcommand) > built-in defaults. Every run writes a manifest next to
// its outputs. Exit codes: 0 success, 1 pipeline error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "drboost/binary_io.hpp"
#include "drboost/boosting.hpp"
#include "drboost/common.hpp"
#include "drboost/distill.hpp"
#include "drboost/eval.hpp"
#include "drboost/index.hpp"
#include "drboost/synthgen.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace drboost;

namespace {

struct Globals {
  int threads = 0;
  bool json = false;
  bool quiet = false;
};

// ---------------------------------------------------------------------------
// Shared helpers

void write_manifest(const fs::path& path, const std::string& command, const CLI::App& sub,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                    const json& extra = json::object()) {
  json m;
  m["command"] = command;
  m["config"] = sub.config_to_str(true, false);
  json in = json::object();
  for (const auto& p : inputs)
    if (!p.empty()) in[p.string()] = hash_file(p.string());
  json out = json::object();
  for (const auto& p : outputs) out[p.filename().string()] = hash_file(p.string());
  m["inputs"] = in;
  m["artifacts"] = out;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << m.dump(2) << '\n';
}

fs::path manifest_beside(const fs::path& file) {
  return file.parent_path() / (file.filename().string() + ".manifest.json");
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void emit(const Globals& g, const json& summary, const std::string& text) {
  if (g.json)
    std::cout << summary.dump() << std::endl;
  else if (!text.empty())
    std::cout << text << std::flush;
}

/// A DRBE ensemble, or a DRBM model served as a one-component ensemble.
Ensemble load_encoder(const std::string& path) {
  const std::string magic = file_magic(path);
  if (magic == "DRBE") return load_ensemble(path);
  if (magic == "DRBM") {
    Ensemble e;
    e.append(load_model(path));
    return e;
  }
  throw ParseError(path + ": not a model or ensemble file");
}

std::vector<std::string> texts_of(const std::vector<TrainPair>& pairs) {
  std::vector<std::string> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.query_text);
  return out;
}

std::vector<SearchResult> search_all(const IndexFile& index, const EmbeddingMatrix& queries,
                                     std::size_t k, std::size_t n_probes) {
  if (queries.dim != index.dim())
    throw ArgumentError("query dim " + std::to_string(queries.dim) + " != index dim " +
                        std::to_string(index.dim()));
  std::vector<SearchResult> out(queries.num_rows);
  parallel_for(queries.num_rows, [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q) out[q] = index.search(queries.row(q), k, n_probes);
  });
  return out;
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(static_cast<std::size_t>(std::stoul(item)));
    } catch (const std::exception&) {
      throw ArgumentError("bad list element \"" + item + "\"");
    }
  }
  return out;
}

void add_featurizer_options(CLI::App* sub, FeaturizerConfig& fc, int& log2_buckets) {
  sub->add_option("--buckets-log2", log2_buckets, "log2 of the hash bucket count")
      ->check(CLI::Range(1, 30))
      ->capture_default_str();
  sub->add_flag("--bigrams,!--no-bigrams", fc.use_bigrams, "hash adjacent-token bigrams")
      ->capture_default_str();
  sub->add_flag("--lowercase,!--no-lowercase", fc.lowercase, "lowercase before hashing")
      ->capture_default_str();
  sub->add_option("--hash-seed", fc.hash_seed, "value XORed into the FNV offset")
      ->capture_default_str();
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  SynthConfig cfg;
  std::string out;
};

void setup_gen(CLI::App& app, GenArgs& a) {
  auto* s = app.add_subcommand("gen", "generate a synthetic topical dataset");
  s->add_option("--out", a.out, "output directory")->required();
  s->add_option("--seed", a.cfg.seed, "generator seed")->capture_default_str();
  s->add_option("--topics", a.cfg.num_topics)->capture_default_str();
  s->add_option("--passages-per-topic", a.cfg.passages_per_topic)->capture_default_str();
  s->add_option("--vocab", a.cfg.vocab_size)->capture_default_str();
  s->add_option("--words-per-passage", a.cfg.words_per_passage)->capture_default_str();
  s->add_option("--queries-per-topic", a.cfg.queries_per_topic)->capture_default_str();
  s->add_option("--query-len", a.cfg.query_len)->capture_default_str();
  s->add_option("--noise", a.cfg.noise_rate)->capture_default_str();
  s->add_option("--subtopics", a.cfg.subtopics_per_topic)->capture_default_str();
  s->add_option("--subtopic-rate", a.cfg.subtopic_rate)->capture_default_str();
  s->add_option("--leaves", a.cfg.leaves_per_subtopic)->capture_default_str();
  s->add_option("--leaf-rate", a.cfg.leaf_rate)->capture_default_str();
  s->add_option("--zipf", a.cfg.zipf_exponent)->capture_default_str();
  s->add_option("--dev-fraction", a.cfg.dev_fraction)->capture_default_str();
}

void run_gen(const GenArgs& a, const CLI::App& sub, const Globals& g) {
  const auto data = generate(a.cfg);
  write_dataset(a.out, data);
  const fs::path dir(a.out);
  std::vector<fs::path> outs;
  for (const char* f : {"corpus.jsonl", "train.jsonl", "dev.jsonl", "dev_qrels.tsv", "topics.tsv"})
    outs.push_back(dir / f);
  write_manifest(dir / "manifest.json", "gen", sub, {}, outs);
  json s{{"passages", data.corpus.size()}, {"train", data.train.size()}, {"dev", data.dev.size()}};
  emit(g, s,
       "wrote " + std::to_string(data.corpus.size()) + " passages, " +
           std::to_string(data.train.size()) + " train and " + std::to_string(data.dev.size()) +
           " dev queries to " + a.out + "\n");
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string corpus, train, dev, out;
  std::string mode = "boost";
  std::string dev_metric = "R@10";
  double dev_fraction = 0.2;
  std::uint64_t split_seed = 1;
  int log2_buckets = 18;
  BoostConfig boost;
  TrainConfig train_cfg;
  double grad_clip = 0.0;
};

void setup_train(CLI::App& app, TrainArgs& a) {
  auto* s = app.add_subcommand("train", "train an ensemble (boost, iterative or bagging)");
  s->add_option("--corpus", a.corpus)->required()->check(CLI::ExistingFile);
  s->add_option("--train", a.train)->required()->check(CLI::ExistingFile);
  s->add_option("--dev", a.dev, "dev pairs; when absent, split from --train")
      ->check(CLI::ExistingFile);
  s->add_option("--dev-fraction", a.dev_fraction)->capture_default_str();
  s->add_option("--split-seed", a.split_seed)->capture_default_str();
  s->add_option("--out", a.out, "output directory")->required();
  s->add_option("--mode", a.mode)
      ->check(CLI::IsMember({"boost", "iterative", "bagging"}))
      ->capture_default_str();
  s->add_option("--rounds", a.boost.max_rounds, "max rounds R")->capture_default_str();
  s->add_option("--tolerance", a.boost.tolerance, "min dev-error reduction")->capture_default_str();
  s->add_option("--dim", a.boost.dim_per_round, "dimension per round")->capture_default_str();
  s->add_option("--negatives", a.boost.negatives_n)->capture_default_str();
  s->add_option("--mine-top-n", a.boost.mine_top_n)->capture_default_str();
  s->add_option("--temperature", a.boost.mine_temperature)->capture_default_str();
  s->add_option("--dev-metric", a.dev_metric, "R@K or MRR@10")->capture_default_str();
  s->add_option("--seed", a.boost.seed)->capture_default_str();
  s->add_option("--lr", a.train_cfg.learning_rate)->capture_default_str();
  s->add_option("--epochs", a.train_cfg.epochs)->capture_default_str();
  s->add_option("--batch-size", a.train_cfg.batch_size)->capture_default_str();
  s->add_option("--negatives-per-example", a.train_cfg.negatives_per_example,
                "cap on explicit negatives (0 = all)")
      ->capture_default_str();
  s->add_option("--grad-clip", a.grad_clip, "global norm clip (0 = off)")->capture_default_str();
  add_featurizer_options(s, a.boost.featurizer, a.log2_buckets);
}

void run_train(TrainArgs a, const CLI::App& sub, const Globals& g) {
  a.boost.featurizer.num_buckets = 1u << a.log2_buckets;
  a.boost.mode = parse_boost_mode(a.mode);
  a.boost.dev_metric = DevMetric::parse(a.dev_metric);
  if (a.grad_clip > 0.0) a.train_cfg.grad_clip = a.grad_clip;
  const Corpus corpus = load_corpus(a.corpus);
  auto train = load_train_pairs(a.train, corpus);
  std::vector<TrainPair> dev;
  if (!a.dev.empty()) {
    dev = load_train_pairs(a.dev, corpus);
  } else {
    auto split = split_dev(train, a.dev_fraction, a.split_seed);
    train = std::move(split.first);
    dev = std::move(split.second);
  }
  const auto result = run_mode(train, dev, corpus, a.boost, a.train_cfg);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_ensemble((dir / "ensemble.drbe").string(), result.ensemble);
  Ensemble rounds;
  for (const auto& m : result.round_models) rounds.append(m);
  save_ensemble((dir / "rounds.drbe").string(), rounds);
  save_history((dir / "history.tsv").string(), result.history);
  write_manifest(dir / "manifest.json", "train", sub, {a.corpus, a.train, a.dev},
                 {dir / "ensemble.drbe", dir / "rounds.drbe", dir / "history.tsv"},
                 json{{"best_round", result.best_round}});

  json hist = json::array();
  std::ostringstream text;
  text << "round\t" << a.boost.dev_metric.name() << "\ttrain_nll\n";
  for (const auto& h : result.history) {
    hist.push_back({{"round", h.round}, {"dev_metric", h.dev_metric}, {"train_nll", h.train_nll}});
    text << h.round << '\t' << h.dev_metric << '\t' << h.train_nll << '\n';
  }
  text << "selected round " << result.best_round << " (" << result.ensemble.total_dim()
       << " dims)\n";
  emit(g, json{{"mode", a.mode}, {"best_round", result.best_round},
               {"total_dim", result.ensemble.total_dim()}, {"history", hist}},
       text.str());
}

// ---------------------------------------------------------------------------
// embed

struct EmbedArgs {
  std::string model, corpus, out;
};

void setup_embed(CLI::App& app, EmbedArgs& a) {
  auto* s = app.add_subcommand("embed", "embed a corpus into an exact DRBX matrix");
  s->add_option("--model", a.model, "ensemble (.drbe) or model (.drbm)")
      ->required()
      ->check(CLI::ExistingFile);
  s->add_option("--corpus", a.corpus)->required()->check(CLI::ExistingFile);
  s->add_option("--out", a.out, "output .drbx file")->required();
}

void run_embed(const EmbedArgs& a, const CLI::App& sub, const Globals& g) {
  const Ensemble enc = load_encoder(a.model);
  const Corpus corpus = load_corpus(a.corpus);
  IndexFile file;
  file.type = IndexType::kExact;
  file.matrix = ensemble_embed_corpus(enc, corpus);
  ensure_parent(a.out);
  save_index(a.out, file);
  write_manifest(manifest_beside(a.out), "embed", sub, {a.model, a.corpus}, {a.out});
  emit(g, json{{"rows", file.num_rows()}, {"dim", file.dim()}},
       "embedded " + std::to_string(file.num_rows()) + " passages (" +
           std::to_string(file.dim()) + " dims) into " + a.out + "\n");
}

// ---------------------------------------------------------------------------
// index

struct IndexArgs {
  std::string embeddings, model, corpus, out;
  std::string type = "exact";
  std::size_t lists = 0;
  int iters = 20;
  std::size_t sub_dim = 4;
  std::uint64_t seed = 1;
  bool nprobe_check = false;
  std::string check_queries;
  std::size_t check_k = 20;
};

void setup_index(CLI::App& app, IndexArgs& a) {
  auto* s = app.add_subcommand("index", "build an exact, IVF or PQ index");
  s->add_option("--embeddings", a.embeddings, "exact .drbx matrix from `embed`")
      ->check(CLI::ExistingFile);
  s->add_option("--model", a.model, "encoder, when embedding inline")->check(CLI::ExistingFile);
  s->add_option("--corpus", a.corpus, "corpus, when embedding inline")->check(CLI::ExistingFile);
  s->add_option("--type", a.type)->check(CLI::IsMember({"exact", "ivf", "pq"}))->capture_default_str();
  s->add_option("--lists", a.lists, "IVF list count K (0 = round(sqrt(N)))")->capture_default_str();
  s->add_option("--iters", a.iters, "k-means iterations")->capture_default_str();
  s->add_option("--sub-dim", a.sub_dim, "PQ sub-vector width")->capture_default_str();
  s->add_option("--seed", a.seed)->capture_default_str();
  s->add_flag("--nprobe-check", a.nprobe_check,
              "verify that probing all IVF lists reproduces exact search");
  s->add_option("--check-queries", a.check_queries,
                "query pairs for --nprobe-check (default: the first 200 rows)")
      ->check(CLI::ExistingFile);
  s->add_option("--check-k", a.check_k)->capture_default_str();
  s->add_option("--out", a.out, "output .drbx file")->required();
}

int run_index(const IndexArgs& a, const CLI::App& sub, const Globals& g) {
  EmbeddingMatrix matrix;
  std::optional<Ensemble> enc;
  if (!a.model.empty()) enc = load_encoder(a.model);
  if (!a.embeddings.empty()) {
    IndexFile in = load_index(a.embeddings);
    if (in.type != IndexType::kExact) throw ArgumentError(a.embeddings + " is not an exact matrix");
    matrix = std::move(in.matrix);
  } else if (enc && !a.corpus.empty()) {
    matrix = ensemble_embed_corpus(*enc, load_corpus(a.corpus));
  } else {
    throw ArgumentError("index needs --embeddings, or --model with --corpus");
  }

  IndexFile file;
  file.type = parse_index_type(a.type);
  if (file.type == IndexType::kPq) {
    file.pq = build_pq(matrix, a.sub_dim, a.seed, a.iters);
  } else {
    if (file.type == IndexType::kIvf) file.ivf = build_ivf(matrix, a.lists, a.iters, a.seed);
    file.matrix = std::move(matrix);
  }

  json extra = json::object();
  bool check_ok = true;
  if (a.nprobe_check) {
    if (file.type != IndexType::kIvf) throw ArgumentError("--nprobe-check needs --type ivf");
    EmbeddingMatrix queries;
    if (!a.check_queries.empty()) {
      if (!enc) throw ArgumentError("--check-queries needs --model");
      queries = embed_queries(*enc, texts_of(load_train_pairs(a.check_queries)));
    } else {
      const std::size_t n = std::min<std::size_t>(200, file.matrix.num_rows);
      queries = EmbeddingMatrix(n, file.matrix.dim);
      std::copy(file.matrix.data.begin(),
                file.matrix.data.begin() + static_cast<std::ptrdiff_t>(n * file.matrix.dim),
                queries.data.begin());
    }
    const auto full = search_all(file, queries, a.check_k, file.ivf->k);
    const auto exact = exact_search_all(file.matrix, queries, a.check_k);
    check_ok = full == exact;
    extra["nprobe_check"] = {{"queries", queries.num_rows}, {"k", a.check_k},
                             {"lists", file.ivf->k}, {"identical", check_ok}};
  }

  ensure_parent(a.out);
  save_index(a.out, file);
  write_manifest(manifest_beside(a.out), "index", sub, {a.embeddings, a.model, a.corpus},
                 {a.out}, extra);
  json s{{"type", a.type}, {"rows", file.num_rows()}, {"dim", file.dim()}};
  std::string text = "built " + a.type + " index over " + std::to_string(file.num_rows()) +
                     " rows";
  if (file.ivf) {
    s["lists"] = file.ivf->k;
    text += ", " + std::to_string(file.ivf->k) + " lists";
  }
  if (file.pq) {
    s["code_bytes_per_vector"] = file.pq->code_bytes_per_vector();
    text += ", " + std::to_string(file.pq->code_bytes_per_vector()) + " code bytes/vector";
  }
  text += "\n";
  if (a.nprobe_check) {
    s["nprobe_check"] = check_ok;
    text += std::string("nprobe check: ") + (check_ok ? "identical to exact search" : "MISMATCH") +
            "\n";
  }
  emit(g, s, text);
  if (!check_ok) {
    std::cerr << "drboost: full-probe IVF search differs from exact search\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// search / eval / sweep

struct SearchArgs {
  std::string index, model, queries, out;
  std::size_t k = 20;
  std::size_t nprobes = 0;
};

void add_query_options(CLI::App* s, SearchArgs& a) {
  s->add_option("--index", a.index)->required()->check(CLI::ExistingFile);
  s->add_option("--model", a.model, "query encoder (.drbe or .drbm)")
      ->required()
      ->check(CLI::ExistingFile);
  s->add_option("--queries", a.queries, "query pairs (.jsonl)")->required()->check(CLI::ExistingFile);
  s->add_option("--k", a.k, "result depth")->capture_default_str();
}

void setup_search(CLI::App& app, SearchArgs& a) {
  auto* s = app.add_subcommand("search", "retrieve the top-k passages per query");
  add_query_options(s, a);
  s->add_option("--nprobes", a.nprobes, "IVF lists to probe (0 = all)")->capture_default_str();
  s->add_option("--out", a.out, "results TSV: query_id rank passage_id score")->required();
}

std::vector<SearchResult> retrieve_with(const SearchArgs& a, const std::vector<TrainPair>& pairs,
                                        const IndexFile& index) {
  const Ensemble enc = load_encoder(a.model);
  return search_all(index, embed_queries(enc, texts_of(pairs)), a.k, a.nprobes);
}

void run_search(const SearchArgs& a, const CLI::App& sub, const Globals& g) {
  const auto pairs = load_train_pairs(a.queries);
  const IndexFile index = load_index(a.index);
  const auto results = retrieve_with(a, pairs, index);
  ensure_parent(a.out);
  {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw IoError("cannot write " + a.out);
    char buf[64];
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      for (std::size_t r = 0; r < results[q].entries.size(); ++r) {
        const auto& hit = results[q].entries[r];
        std::snprintf(buf, sizeof buf, "%.9g", hit.score);
        out << pairs[q].query_id << '\t' << (r + 1) << '\t' << hit.passage_id << '\t' << buf << '\n';
      }
    }
  }
  write_manifest(manifest_beside(a.out), "search", sub, {a.index, a.model, a.queries}, {a.out});
  emit(g, json{{"queries", pairs.size()}, {"k", a.k}},
       "searched " + std::to_string(pairs.size()) + " queries; results in " + a.out + "\n");
}

struct EvalArgs {
  SearchArgs search;
  std::string qrels, dataset = "dataset", model_name, ks = "10,20,100";
};

void setup_eval(CLI::App& app, EvalArgs& a) {
  auto* s = app.add_subcommand("eval", "search and score R@K, MRR@10, NDCG@10");
  a.search.k = 100;
  add_query_options(s, a.search);
  s->add_option("--nprobes", a.search.nprobes, "IVF lists to probe (0 = all)")->capture_default_str();
  s->add_option("--qrels", a.qrels, "graded judgements for NDCG@10")->check(CLI::ExistingFile);
  s->add_option("--ks", a.ks, "recall cut-offs")->capture_default_str();
  s->add_option("--dataset", a.dataset, "dataset name used in report file names")
      ->capture_default_str();
  s->add_option("--model-name", a.model_name, "model name used in report file names");
  s->add_option("--out", a.search.out, "report directory")->required();
}

void run_eval(const EvalArgs& a, const CLI::App& sub, const Globals& g) {
  const auto pairs = load_train_pairs(a.search.queries);
  const IndexFile index = load_index(a.search.index);
  auto ks = parse_list(a.ks);
  for (std::size_t k : ks)
    if (k == 0 || k > a.search.k)
      throw ArgumentError("--ks values must lie in [1, --k]");
  const auto results = retrieve_with(a.search, pairs, index);
  const Qrels qrels = a.qrels.empty() ? Qrels{} : load_qrels(a.qrels);
  EvalReport report = evaluate_results(results, pairs, qrels, ks);
  report.config = {{"index", a.search.index},      {"model", a.search.model},
                   {"queries", a.search.queries},  {"k", std::to_string(a.search.k)},
                   {"nprobes", std::to_string(a.search.nprobes)},
                   {"index_type", index_type_name(index.type)}};
  const std::string model_name =
      a.model_name.empty() ? fs::path(a.search.model).stem().string() : a.model_name;
  const std::string stem =
      report_stem(a.dataset, model_name, index_type_name(index.type), a.search.k);
  save_report(a.search.out, stem, report);
  const fs::path dir(a.search.out);
  write_manifest(dir / (stem + ".manifest.json"), "eval", sub,
                 {a.search.index, a.search.model, a.search.queries, a.qrels},
                 {dir / (stem + ".json"), dir / (stem + ".tsv")});
  json metrics = json::object();
  std::ostringstream text;
  for (const auto& [name, value] : report.metrics) {
    metrics[name] = value;
    text << name << '\t' << value << '\n';
  }
  emit(g, json{{"report", stem}, {"metrics", metrics}}, text.str());
}

struct SweepArgs {
  SearchArgs search;
  std::string probes;
};

void setup_sweep(CLI::App& app, SweepArgs& a) {
  auto* s = app.add_subcommand("sweep", "IVF n_probes sweep (recall and recall-vs-exact)");
  add_query_options(s, a.search);
  s->add_option("--probes", a.probes, "comma-separated probe counts (default 1,2,4,...,K)");
  s->add_option("--out", a.search.out, "TSV: n_probes recall_at_k recall_vs_exact")->required();
}

void run_sweep(const SweepArgs& a, const CLI::App& sub, const Globals& g) {
  const auto pairs = load_train_pairs(a.search.queries);
  const IndexFile index = load_index(a.search.index);
  if (index.type != IndexType::kIvf) throw ArgumentError("sweep needs an IVF index");
  const Ensemble enc = load_encoder(a.search.model);
  const auto queries = embed_queries(enc, texts_of(pairs));
  const auto probes = a.probes.empty() ? default_probe_list(index.ivf->k) : parse_list(a.probes);
  const auto rows = probe_sweep(*index.ivf, index.matrix, queries, golds_of(pairs), a.search.k, probes);
  ensure_parent(a.search.out);
  save_probe_table(a.search.out, rows);
  write_manifest(manifest_beside(a.search.out), "sweep", sub,
                 {a.search.index, a.search.model, a.search.queries}, {a.search.out});
  json arr = json::array();
  std::ostringstream text;
  text << "n_probes\tR@" << a.search.k << "\trecall_vs_exact\n";
  for (const auto& r : rows) {
    arr.push_back({{"n_probes", r.n_probes}, {"recall", r.recall_at_k},
                   {"recall_vs_exact", r.recall_vs_exact}});
    text << r.n_probes << '\t' << r.recall_at_k << '\t' << r.recall_vs_exact << '\n';
  }
  emit(g, json{{"rows", arr}}, text.str());
}

// ---------------------------------------------------------------------------
// margins / distill

struct MarginArgs {
  std::string model, corpus, train, out;
  std::size_t k = 20;
};

void setup_margins(CLI::App& app, MarginArgs& a) {
  auto* s = app.add_subcommand("margins", "top-k margin quantiles per boosting round");
  s->add_option("--model", a.model, "ensemble; every prefix is evaluated")
      ->required()
      ->check(CLI::ExistingFile);
  s->add_option("--corpus", a.corpus)->required()->check(CLI::ExistingFile);
  s->add_option("--train", a.train, "pairs to measure margins on")->required()->check(CLI::ExistingFile);
  s->add_option("--k", a.k)->capture_default_str();
  s->add_option("--out", a.out, "TSV: round p50 p75 p90")->required();
}

void run_margins(const MarginArgs& a, const CLI::App& sub, const Globals& g) {
  const Ensemble enc = load_encoder(a.model);
  const Corpus corpus = load_corpus(a.corpus);
  const auto pairs = load_train_pairs(a.train, corpus);
  const auto rows = margin_quantiles(enc, pairs, corpus, a.k);
  ensure_parent(a.out);
  save_margin_table(a.out, rows);
  write_manifest(manifest_beside(a.out), "margins", sub, {a.model, a.corpus, a.train}, {a.out});
  json arr = json::array();
  std::ostringstream text;
  text << "round\tp50\tp75\tp90\n";
  for (const auto& r : rows) {
    arr.push_back({{"round", r.round}, {"p50", r.p50}, {"p75", r.p75}, {"p90", r.p90}});
    text << r.round << '\t' << r.p50 << '\t' << r.p75 << '\t' << r.p90 << '\n';
  }
  emit(g, json{{"rows", arr}}, text.str());
}

struct DistillArgs {
  std::string model, corpus, train, dev, out;
  std::string init = "ensemble";
  DistillConfig cfg;
};

void setup_distill(CLI::App& app, DistillArgs& a) {
  auto* s = app.add_subcommand("distill", "distil an ensemble into one query encoder");
  s->add_option("--model", a.model, "source ensemble")->required()->check(CLI::ExistingFile);
  s->add_option("--corpus", a.corpus)->required()->check(CLI::ExistingFile);
  s->add_option("--train", a.train)->required()->check(CLI::ExistingFile);
  s->add_option("--dev", a.dev, "pairs for early stopping")->required()->check(CLI::ExistingFile);
  s->add_option("--epochs", a.cfg.epochs)->capture_default_str();
  s->add_option("--lr", a.cfg.learning_rate)->capture_default_str();
  s->add_option("--batch-size", a.cfg.batch_size)->capture_default_str();
  s->add_option("--seed", a.cfg.seed)->capture_default_str();
  s->add_option("--passage-weight", a.cfg.passage_weight, "weight of the |E(q)-c|^2 term")
      ->capture_default_str();
  s->add_option("--init", a.init)->check(CLI::IsMember({"ensemble", "random"}))->capture_default_str();
  s->add_option("--out", a.out, "output .drbm file")->required();
}

void run_distill(DistillArgs a, const CLI::App& sub, const Globals& g) {
  a.cfg.init = parse_distill_init(a.init);
  const Ensemble enc = load_encoder(a.model);
  const Corpus corpus = load_corpus(a.corpus);
  const auto train = load_train_pairs(a.train, corpus);
  const auto dev = load_train_pairs(a.dev, corpus);
  const auto result = distill(enc, train, dev, corpus, a.cfg);
  ensure_parent(a.out);
  save_model(a.out, result.model);
  write_manifest(manifest_beside(a.out), "distill", sub, {a.model, a.corpus, a.train, a.dev},
                 {a.out}, json{{"best_epoch", result.best_epoch}});
  const auto& best = result.epochs.at(static_cast<std::size_t>(result.best_epoch));
  emit(g,
       json{{"best_epoch", result.best_epoch}, {"dev_loss", best.dev_nll},
            {"init_dev_loss", result.epochs.front().dev_nll}},
       "selected epoch " + std::to_string(result.best_epoch) + ", dev L = " +
           std::to_string(best.dev_nll) + " (init " +
           std::to_string(result.epochs.front().dev_nll) + ")\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drboost: boosted dense retrieval"};
  app.set_config("--config", "", "TOML/INI file; [section] names match subcommands");
  app.require_subcommand(1, 1);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "worker threads (default: $DRBOOST_THREADS, else 1)")
      ->check(CLI::Range(1, 1024));
  app.add_flag("--json", g.json, "machine-readable summary on stdout");
  app.add_flag("--quiet", g.quiet, "suppress progress logging");

  GenArgs gen;
  TrainArgs train;
  EmbedArgs embed;
  IndexArgs index;
  SearchArgs search;
  EvalArgs eval;
  SweepArgs sweep;
  MarginArgs margins;
  DistillArgs dist;
  setup_gen(app, gen);
  setup_train(app, train);
  setup_embed(app, embed);
  setup_index(app, index);
  setup_search(app, search);
  setup_eval(app, eval);
  setup_sweep(app, sweep);
  setup_margins(app, margins);
  setup_distill(app, dist);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (g.threads > 0) set_num_threads(g.threads);
  set_quiet(g.quiet);
  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "gen") run_gen(gen, *sub, g);
    else if (name == "train") run_train(train, *sub, g);
    else if (name == "embed") run_embed(embed, *sub, g);
    else if (name == "index") return run_index(index, *sub, g);
    else if (name == "search") run_search(search, *sub, g);
    else if (name == "eval") run_eval(eval, *sub, g);
    else if (name == "sweep") run_sweep(sweep, *sub, g);
    else if (name == "margins") run_margins(margins, *sub, g);
    else if (name == "distill") run_distill(dist, *sub, g);
  } catch (const std::exception& e) {
    std::cerr << "drboost " << name << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
