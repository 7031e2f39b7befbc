#include "eljst/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "eljst/corpus.hpp"
#include "eljst/eval.hpp"
#include "eljst/graph.hpp"
#include "eljst/posterior_io.hpp"
#include "eljst/sampler.hpp"
#include "json.hpp"

namespace eljst::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CorpusOptions {
  std::string path;
  std::size_t min_df = 1;
  double max_df = 1.0;
  double holdout = 0.0;  // fraction held out for testing; 0 keeps everything
  std::uint64_t split_seed = 1;
};

struct GraphSource {
  std::string embeddings;
  double threshold = 0.3;
  std::string edges;
  std::string attention;
  std::string attention_mode = "mutual";

  int selected() const { return !embeddings.empty() + !edges.empty() + !attention.empty(); }

  std::string describe() const {
    if (!embeddings.empty()) {
      std::ostringstream s;
      s << "embeddings:" << fs::path(embeddings).filename().string() << "@" << threshold;
      return s.str();
    }
    if (!edges.empty()) return "edges:" + fs::path(edges).filename().string();
    if (!attention.empty()) return "attention:" + fs::path(attention).filename().string() + ":" + attention_mode;
    return "none";
  }
};

struct TrainOptions {
  CorpusOptions corpus;
  GraphSource graph;
  std::size_t topics = 5;
  std::optional<double> alpha;
  double beta = 0.01;
  std::optional<double> gamma;
  double eps_pert = 0.01;
  double eta = 1.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  std::size_t chains = 1;
  bool final_sample = false;
  std::size_t average_window = 100;
  std::size_t log_every = 100;
  bool dump_assignments = false;
  std::string out;
};

void add_corpus_options(CLI::App* cmd, CorpusOptions& o, bool with_split) {
  cmd->add_option("--corpus", o.path, "JSON-lines corpus")->required()->check(CLI::ExistingFile);
  cmd->add_option("--min-df", o.min_df, "minimum document frequency")->check(CLI::PositiveNumber);
  cmd->add_option("--max-df", o.max_df, "maximum document frequency as a fraction of documents")
      ->check(CLI::Range(0.0, 1.0));
  if (with_split) {
    cmd->add_option("--holdout", o.holdout, "fraction of documents held out (stratified by label)")
        ->check(CLI::Range(0.0, 0.999));
    cmd->add_option("--split-seed", o.split_seed, "seed of the train/test split");
  }
}

void add_graph_options(CLI::App* cmd, GraphSource& g) {
  cmd->add_option("--embeddings", g.embeddings, "word vectors (text format)")->check(CLI::ExistingFile);
  cmd->add_option("--threshold", g.threshold, "cosine similarity threshold")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--edges", g.edges, "precomputed edge list")->check(CLI::ExistingFile);
  cmd->add_option("--attention", g.attention, "attention JSON-lines")->check(CLI::ExistingFile);
  cmd->add_option("--attention-mode", g.attention_mode, "mutual (any head) or average")
      ->check(CLI::IsMember({"mutual", "average"}));
}

void print_warnings(const Warnings& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

Corpus load_training_corpus(const CorpusOptions& o, Corpus* heldout, Warnings& warnings) {
  Corpus corpus = load_corpus(o.path, {o.min_df, o.max_df}, &warnings);
  if (o.holdout > 0.0) {
    auto [train, test] = train_test_split(corpus, 1.0 - o.holdout, o.split_seed, &warnings);
    if (heldout != nullptr) *heldout = std::move(test);
    return std::move(train);
  }
  return corpus;
}

std::vector<DocumentGraph> build_graphs(const GraphSource& g, const Corpus& corpus, Warnings& warnings) {
  if (g.selected() > 1) throw InputError("choose at most one of --embeddings, --edges, --attention");
  if (!g.embeddings.empty()) {
    if (!(g.threshold > 0.0 && g.threshold < 1.0)) throw InputError("--threshold must be in (0, 1)");
    const auto table = load_embeddings(g.embeddings, corpus.vocabulary, &warnings);
    return similarity_graphs(corpus, table, g.threshold);
  }
  if (!g.edges.empty()) return load_edge_list(g.edges, corpus);
  if (!g.attention.empty()) {
    const auto mode = g.attention_mode == "average" ? AttentionMode::kAveragedHeads : AttentionMode::kMutualTopAnyHead;
    return attention_graphs(corpus, load_attention(g.attention), mode);
  }
  return empty_graphs(corpus);
}

json stats_to_json(const GraphStats& s) {
  json hist = json::object();
  for (auto [edges, docs] : s.histogram) hist[std::to_string(edges)] = docs;
  return {{"documents", s.num_graphs},
          {"total_edges", s.total_edges},
          {"mean_edges", s.mean_edges},
          {"mean_edges_rounded", s.mean_edges_rounded},
          {"max_edges", s.max_edges},
          {"histogram", hist}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

int cmd_build_graph(const CorpusOptions& co, const GraphSource& g, const std::string& out_dir, std::ostream& out,
                    std::ostream& err) {
  if (g.embeddings.empty() && g.attention.empty()) throw InputError("build-graph needs --embeddings or --attention");
  Warnings warnings;
  const Corpus corpus = load_corpus(co.path, {co.min_df, co.max_df}, &warnings);
  const auto graphs = build_graphs(g, corpus, warnings);
  print_warnings(warnings, err);

  fs::create_directories(out_dir);
  write_edge_list(fs::path(out_dir) / "edges.txt", graphs);
  json stats = stats_to_json(graph_stats(graphs));
  stats["source"] = g.describe();
  write_text(fs::path(out_dir) / "graph_stats.json", stats.dump(2) + "\n");
  out << "wrote " << (fs::path(out_dir) / "edges.txt").string() << " (" << stats["total_edges"].get<std::size_t>()
      << " edges, mean " << stats["mean_edges"].get<double>() << ", max " << stats["max_edges"].get<std::size_t>()
      << ")\n";
  return kExitOk;
}

Hyperparameters make_hyperparameters(const TrainOptions& o, std::size_t labels) {
  Hyperparameters hp = Hyperparameters::defaults(o.topics, labels);
  if (o.alpha) hp.alpha.assign(o.topics, *o.alpha);
  hp.beta = o.beta;
  if (o.gamma) hp.gamma = *o.gamma;
  hp.eps_pert = o.eps_pert;
  hp.eta = o.graph.selected() == 0 ? 0.0 : o.eta;  // no graph source means no MRF term
  hp.iterations = o.iterations;
  hp.seed = o.seed;
  hp.estimate = o.final_sample ? EstimateMode::kFinalSample : EstimateMode::kAverageTail;
  hp.average_window = o.average_window;
  hp.validate();
  return hp;
}

json run_info(const TrainOptions& o) {
  return {{"corpus", fs::absolute(o.corpus.path).lexically_normal().string()},
          {"min_df", o.corpus.min_df},
          {"max_df", o.corpus.max_df},
          {"holdout", o.corpus.holdout},
          {"split_seed", o.corpus.split_seed},
          {"eta_requested", o.eta}};
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw InputError("train needs --out");
  if (o.chains < 1) throw InputError("--chains must be >= 1");
  Warnings warnings;
  Corpus heldout;
  const Corpus corpus = load_training_corpus(o.corpus, &heldout, warnings);
  const auto graphs = build_graphs(o.graph, corpus, warnings);
  print_warnings(warnings, err);
  const Hyperparameters base = make_hyperparameters(o, static_cast<std::size_t>(corpus.num_labels));

  fs::create_directories(o.out);
  if (o.corpus.holdout > 0.0) write_corpus(fs::path(o.out) / "heldout.jsonl", to_raw(heldout));

  const bool multi = o.chains > 1;
  std::vector<std::ostringstream> logs(o.chains);
  std::vector<std::exception_ptr> failures(o.chains);

  auto run_chain = [&](std::size_t c) {
    try {
      Hyperparameters hp = base;
      hp.seed = base.seed + c;
      const fs::path dir = multi ? fs::path(o.out) / ("chain-" + std::to_string(c)) : fs::path(o.out);
      std::ostringstream trace;
      trace << "sweep\tjoint_log_prob\n";
      TrainCallbacks callbacks;
      callbacks.on_sweep = [&](std::size_t sweep, const ModelState& state) {
        if (o.log_every == 0 || (sweep % o.log_every != 0 && sweep != hp.iterations)) return;
        const double lp = joint_log_prob(state);
        trace << sweep << '\t' << lp << '\n';
        logs[c] << "chain " << c << " sweep " << sweep << " joint_log_prob " << lp << '\n';
      };
      auto result = train_chain(corpus, graphs, hp, callbacks);
      result.posterior.manifest.graph_source = o.graph.describe();
      result.posterior.manifest.run = run_info(o);
      write_posterior(dir, result.posterior, corpus.vocabulary);
      write_text(dir / "trace.tsv", trace.str());
      if (o.dump_assignments) write_assignments(dir / "assignments.jsonl", result.state);
    } catch (...) {
      failures[c] = std::current_exception();
    }
  };

  if (multi) {
    std::vector<std::thread> workers;
    for (std::size_t c = 0; c < o.chains; ++c) workers.emplace_back(run_chain, c);
    for (auto& w : workers) w.join();
  } else {
    run_chain(0);
  }
  for (const auto& log : logs) err << log.str();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  out << "trained " << o.chains << " chain(s) on " << corpus.size() << " documents, V=" << corpus.vocabulary.size()
      << ", T=" << base.topics << ", S=" << base.labels << " -> " << o.out << '\n';
  return kExitOk;
}

// Training corpus replayed from the manifest, verified against its hash.
Corpus reference_corpus(const LoadedPosterior& lp, const std::string& override_path, Warnings& warnings) {
  const auto& run = lp.posterior.manifest.run;
  Corpus corpus;
  if (!override_path.empty()) {
    corpus = index_corpus(read_corpus(override_path), lp.vocabulary, &warnings);
  } else {
    if (!run.contains("corpus")) throw InputError("manifest has no training corpus; pass --reference");
    CorpusOptions co;
    co.path = run.at("corpus").get<std::string>();
    co.min_df = run.value("min_df", std::size_t{1});
    co.max_df = run.value("max_df", 1.0);
    co.holdout = run.value("holdout", 0.0);
    co.split_seed = run.value("split_seed", std::uint64_t{1});
    Warnings ignored;
    corpus = load_training_corpus(co, nullptr, ignored);
    if (corpus_hash(corpus) != lp.posterior.manifest.corpus_hash)
      throw InputError("training corpus " + co.path + " no longer matches the manifest hash; pass --reference");
  }
  if (corpus.size() == 0) throw InputError("reference corpus has no in-vocabulary documents");
  return corpus;
}

struct EvaluateOptions {
  std::string posterior;
  std::string corpus;
  std::string reference;
  std::string out;
  MetricSettings settings;
  std::size_t fold_in_iterations = 200;
  std::uint64_t seed = 1;
  std::size_t top_n = 10;
};

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
  const auto lp = read_posterior(o.posterior);
  const auto& post = lp.posterior;
  Warnings warnings;

  const RawCorpus raw_test = read_corpus(o.corpus);
  if (static_cast<std::size_t>(raw_test.num_labels) != post.labels)
    throw InputError("vocabulary mismatch: test corpus declares " + std::to_string(raw_test.num_labels) +
                     " labels, model has " + std::to_string(post.labels));
  const Corpus test = index_corpus(raw_test, lp.vocabulary, &warnings);
  if (test.size() == 0) throw InputError("vocabulary mismatch: no test document has an in-vocabulary token");
  const Corpus reference = reference_corpus(lp, o.reference, warnings);
  print_warnings(warnings, err);

  MetricReport report;
  report.settings = o.settings;
  const PhiView phi = post.phi_view();
  report.tscs = tscs(phi, reference, std::min(o.settings.tscs_top_n, post.vocab));
  report.diversity = diversity(phi, std::min(o.settings.diversity_top_n, post.vocab));
  report.h_score = h_score(post.theta_view());
  const FoldInResult folded =
      fold_in(test, phi, post.manifest.hp, {o.fold_in_iterations, std::min<std::size_t>(50, o.fold_in_iterations), o.seed});
  report.perplexity = perplexity(test, phi, folded.theta_view(post.topics), folded.pi_view(post.topics, post.labels));

  json j = report_to_json(report, phi, lp.vocabulary, post.manifest.label_names, o.top_n);
  j["test_documents"] = test.size();
  j["fold_in_iterations"] = o.fold_in_iterations;
  const fs::path path = o.out.empty() ? fs::path(o.posterior) / "report.json" : fs::path(o.out);
  write_text(path, j.dump(2) + "\n");
  out << "tscs " << report.tscs.value << "  diversity " << report.diversity << "  h_score " << report.h_score.value
      << "  perplexity " << report.perplexity << "\nwrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_topics(const std::string& dir, std::size_t top_n, const std::string& out_path, std::ostream& out) {
  const auto lp = read_posterior(dir);
  if (top_n < 1 || top_n > lp.posterior.vocab) throw InputError("--top-n must be between 1 and V");
  const std::string md = render_topics_markdown(lp.posterior.phi_view(), lp.vocabulary,
                                                lp.posterior.manifest.label_names, top_n);
  const fs::path path = out_path.empty() ? fs::path(dir) / "topics.md" : fs::path(out_path);
  write_text(path, md);
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_stats(const CorpusOptions& co, const GraphSource& g, std::ostream& out, std::ostream& err) {
  Warnings warnings;
  const Corpus corpus = load_corpus(co.path, {co.min_df, co.max_df}, &warnings);
  json labels = json::object();
  for (int k = 1; k <= corpus.num_labels; ++k) labels[corpus.label_names[static_cast<std::size_t>(k - 1)]] = 0;
  for (const auto& d : corpus.documents) labels[corpus.label_names[static_cast<std::size_t>(d.label - 1)]] =
      labels[corpus.label_names[static_cast<std::size_t>(d.label - 1)]].get<std::size_t>() + 1;
  json j = {{"documents", corpus.size()},
            {"vocabulary", corpus.vocabulary.size()},
            {"tokens", corpus.token_count()},
            {"mean_length", static_cast<double>(corpus.token_count()) / static_cast<double>(corpus.size())},
            {"labels", labels}};
  if (g.selected() > 0) {
    j["graph"] = stats_to_json(graph_stats(build_graphs(g, corpus, warnings)));
    j["graph"]["source"] = g.describe();
  }
  print_warnings(warnings, err);
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embedding-enhanced labeled joint sentiment-topic model"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags override it)");
  app.require_subcommand(1);

  CorpusOptions graph_corpus;
  GraphSource graph_source;
  std::string graph_out;
  auto* build = app.add_subcommand("build-graph", "build per-document MRF edge lists");
  add_corpus_options(build, graph_corpus, false);
  add_graph_options(build, graph_source);
  build->add_option("--out", graph_out, "output directory")->required();

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "run the Gibbs sampler and write a posterior directory");
  add_corpus_options(train_cmd, train_opts.corpus, true);
  add_graph_options(train_cmd, train_opts.graph);
  train_cmd->add_option("--topics", train_opts.topics, "number of topics T")->check(CLI::PositiveNumber);
  train_cmd->add_option("--eta", train_opts.eta, "MRF strength (0 disables the MRF)")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--alpha", train_opts.alpha, "symmetric document-topic prior (default 10/T)");
  train_cmd->add_option("--beta", train_opts.beta, "topic-sentiment-word prior");
  train_cmd->add_option("--gamma", train_opts.gamma, "base label prior (default 10/(T*S))");
  train_cmd->add_option("--eps-pert", train_opts.eps_pert, "label prior perturbation in (0, 1)");
  train_cmd->add_option("--iterations", train_opts.iterations, "Gibbs sweeps");
  train_cmd->add_option("--seed", train_opts.seed, "random seed");
  train_cmd->add_option("--chains", train_opts.chains, "independent chains (seeds seed..seed+N-1)");
  train_cmd->add_option("--out", train_opts.out, "posterior directory")->required();
  train_cmd->add_flag("--final-sample", train_opts.final_sample, "estimate from the last sweep only");
  train_cmd->add_option("--average-window", train_opts.average_window, "sweeps averaged for the estimates");
  train_cmd->add_option("--log-every", train_opts.log_every, "joint log-probability trace interval");
  train_cmd->add_flag("--dump-assignments", train_opts.dump_assignments, "write assignments.jsonl");

  EvaluateOptions eval_opts;
  auto* eval_cmd = app.add_subcommand("evaluate", "compute TSCS, diversity, H-score and perplexity");
  eval_cmd->add_option("--posterior", eval_opts.posterior, "posterior directory")->required();
  eval_cmd->add_option("--corpus", eval_opts.corpus, "test corpus")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--reference", eval_opts.reference, "co-occurrence corpus for TSCS (default: training corpus)");
  eval_cmd->add_option("--tscs-top-n", eval_opts.settings.tscs_top_n, "top words per block for TSCS");
  eval_cmd->add_option("--diversity-top-n", eval_opts.settings.diversity_top_n, "top words per block for diversity");
  eval_cmd->add_option("--top-n", eval_opts.top_n, "top words per block in report.json");
  eval_cmd->add_option("--fold-in-iterations", eval_opts.fold_in_iterations, "fold-in sweeps for perplexity");
  eval_cmd->add_option("--seed", eval_opts.seed, "fold-in seed");
  eval_cmd->add_option("--out", eval_opts.out, "report path (default <posterior>/report.json)");

  std::string topics_dir, topics_out;
  std::size_t topics_n = 5;
  auto* topics_cmd = app.add_subcommand("topics", "render top words per topic and sentiment label");
  topics_cmd->add_option("--posterior", topics_dir, "posterior directory")->required();
  topics_cmd->add_option("--top-n", topics_n, "words per block");
  topics_cmd->add_option("--out", topics_out, "output path (default <posterior>/topics.md)");

  CorpusOptions stats_corpus;
  GraphSource stats_graph;
  auto* stats_cmd = app.add_subcommand("stats", "corpus and graph statistics as JSON");
  add_corpus_options(stats_cmd, stats_corpus, false);
  add_graph_options(stats_cmd, stats_graph);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*build) return cmd_build_graph(graph_corpus, graph_source, graph_out, out, err);
    if (*train_cmd) return cmd_train(train_opts, out, err);
    if (*eval_cmd) return cmd_evaluate(eval_opts, out, err);
    if (*topics_cmd) return cmd_topics(topics_dir, topics_n, topics_out, out);
    if (*stats_cmd) return cmd_stats(stats_corpus, stats_graph, out, err);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumericError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace eljst::cli
