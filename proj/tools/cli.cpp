#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "netsumm/corpus.hpp"
#include "netsumm/errors.hpp"
#include "netsumm/eval.hpp"
#include "netsumm/feedback.hpp"
#include "netsumm/http_api.hpp"
#include "netsumm/layout.hpp"
#include "netsumm/netgraph.hpp"
#include "netsumm/qlearn.hpp"
#include "netsumm/service.hpp"
#include "netsumm/summarizer.hpp"

namespace netsumm {
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw Error("cannot write " + path.string());
}

// --- configuration files -----------------------------------------------

std::string scalar_argument(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Turns `--config file.json` into leading arguments so that flags given
// explicitly on the command line win (they are parsed later and CLI11 is
// configured to keep the last value).
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> config_path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (!config_path) return args;

  const auto cfg = read_json(*config_path);
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
  if (cfg.contains("command") && cfg.at("command") != args[1]) {
    throw UsageError("config file is for \"" + scalar_argument(cfg.at("command")) + "\", not \"" + args[1] + "\"");
  }
  std::vector<std::string> expanded{args[0], args[1]};
  for (const auto& [key, value] : cfg.items()) {
    if (key == "v" || key == "command") continue;
    const std::string flag = "--" + key;
    if (given_on_command_line(args, flag) || value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) expanded.push_back(flag);
      continue;
    }
    expanded.push_back(flag);
    if (value.is_array()) {
      for (const auto& item : value) expanded.push_back(scalar_argument(item));
    } else if (value.is_object()) {
      expanded.push_back(value.dump());
    } else {
      expanded.push_back(scalar_argument(value));
    }
  }
  expanded.insert(expanded.end(), args.begin() + 2, args.end());
  return expanded;
}

nlohmann::json typed_value(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  if (!text.empty()) {
    char* end = nullptr;
    const long long i = std::strtoll(text.c_str(), &end, 10);
    if (*end == '\0') return i;
    const double d = std::strtod(text.c_str(), &end);
    if (*end == '\0') return d;
  }
  return text;
}

std::vector<std::string> split_default_list(std::string text) {
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']') text = text.substr(1, text.size() - 2);
  std::vector<std::string> items;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

// Every resolved option of the subcommand, in a shape --config accepts.
nlohmann::json echo_config(const CLI::App& sub, const nlohmann::json& extra) {
  nlohmann::json j{{"v", 1}, {"command", sub.get_name()}};
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || extra.contains(name)) continue;
    const bool many = opt->get_items_expected_max() > 1;
    std::vector<std::string> values = opt->results();
    if (opt->count() == 0) {
      const auto def = opt->get_default_str();
      if (def.empty()) continue;
      values = many ? split_default_list(def) : std::vector<std::string>{def};
    }
    if (many) {
      auto arr = nlohmann::json::array();
      for (const auto& v : values) arr.push_back(typed_value(v));
      j[name] = arr;
    } else if (!values.empty()) {
      j[name] = typed_value(values.back());
    }
  }
  for (const auto& [key, value] : extra.items()) j[key] = value;
  return j;
}

// --- shared inputs -----------------------------------------------------

struct CorpusInput {
  std::string path;
  std::string format = "jsonl";

  void add_to(CLI::App& app) {
    app.add_option("--corpus", path, "Corpus path (jsonl file or directory of .txt files)");
    app.add_option("--format", format, "Corpus format: jsonl or dir")->capture_default_str();
  }

  Corpus load() const {
    if (path.empty()) throw UsageError("--corpus is required");
    const auto parsed = parse_corpus_format(format);
    if (!parsed) throw UsageError("unknown corpus format \"" + format + "\"");
    return load_corpus(path, *parsed);
  }
};

struct FeedbackInput {
  std::string feedback_path;
  std::string events_path;

  void add_to(CLI::App& app) {
    app.add_option("--feedback", feedback_path, "Feedback graphs JSON file");
    app.add_option("--events", events_path, "Interaction event log (jsonl)");
  }

  FeedbackGraphs load() const {
    FeedbackGraphs fb;
    if (!feedback_path.empty()) fb = FeedbackGraphs::from_json(read_json(feedback_path));
    if (!events_path.empty()) {
      const auto replayed = replay_event_log(read_text(events_path));
      for (const auto& p : replayed.positive()) fb.add(Sign::kPositive, p);
      for (const auto& p : replayed.negative()) fb.add(Sign::kNegative, p);
    }
    return fb;
  }
};

struct HyperparameterInput {
  std::string json;
  std::size_t episodes = 0;

  void add_to(CLI::App& app) {
    app.add_option("--hyperparameters", json, "Q-learning hyperparameters as a JSON object");
    app.add_option("--episodes", episodes, "Episodes per branch (overrides --hyperparameters)");
  }

  Hyperparameters resolve() const {
    Hyperparameters hp;
    if (!json.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(json);
      } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(std::string("--hyperparameters is not valid JSON: ") + e.what());
      }
      hp = Hyperparameters::from_json(j);
    }
    if (episodes > 0) hp.episodes = episodes;
    hp.validate();
    return hp;
  }
};

struct LayoutInput {
  std::string json;

  void add_to(CLI::App& app) { app.add_option("--layout", json, "Force-layout parameters as a JSON object"); }

  ForceConfig resolve(std::uint64_t seed) const {
    ForceConfig config;
    config.seed = seed;
    if (!json.empty()) {
      try {
        auto j = nlohmann::json::parse(json);
        if (!j.contains("seed")) j["seed"] = seed;
        config = ForceConfig::from_json(j);
      } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(std::string("--layout is not valid JSON: ") + e.what());
      }
    }
    config.validate();
    return config;
  }
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

Hierarchy load_hierarchy(const std::string& path, const DocumentGraph& graph, const FeedbackGraphs& fb) {
  require(path, "--hierarchy");
  return Hierarchy::from_json(read_json(path), graph, fb);
}

std::size_t resolve_level(const Hierarchy& h, int level) {
  if (level < 0) return h.depth();
  if (static_cast<std::size_t>(level) > h.depth()) {
    throw NotFoundError("unknown level " + std::to_string(level) + " (hierarchy depth is " +
                        std::to_string(h.depth()) + ")");
  }
  return static_cast<std::size_t>(level);
}

nlohmann::json satisfaction_json(const Satisfaction& s) {
  return {{"satisfied", s.satisfied}, {"total", s.total}, {"ratio", s.ratio()}};
}

// --- serve -------------------------------------------------------------

ApiServer* g_server = nullptr;

extern "C" void handle_stop_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int cli_main(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interactive document-network summarization with feedback-constrained Q-learning", "netsumm"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  auto add_common = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("--config", config_path, "JSON config file; explicit flags take precedence");
    sub->add_option("--out", out_dir, "Output directory");
    if (with_seed) sub->add_option("--seed", seed, "Random seed")->capture_default_str();
  };

  CorpusInput corpus_in;
  FeedbackInput feedback_in;
  HyperparameterInput hp_in;
  LayoutInput layout_in;
  std::string hierarchy_path;
  int target = 2;
  int level = -1;
  std::size_t terms = 10;

  auto* build_graph = app.add_subcommand("build-graph", "Build the TF-IDF cosine document graph");
  add_common(build_graph, false);
  corpus_in.add_to(*build_graph);

  auto* train = app.add_subcommand("train", "Train hierarchical feedback-constrained summaries");
  add_common(train, true);
  corpus_in.add_to(*train);
  feedback_in.add_to(*train);
  hp_in.add_to(*train);
  train->add_option("--k", target, "Number of groups at the deepest level (power of two)")->capture_default_str();

  auto* summarize = app.add_subcommand("summarize", "Emit one summary level with word clouds");
  add_common(summarize, false);
  corpus_in.add_to(*summarize);
  feedback_in.add_to(*summarize);
  summarize->add_option("--hierarchy", hierarchy_path, "Hierarchy JSON written by train");
  summarize->add_option("--level", level, "Level to emit; negative selects the best level")->capture_default_str();
  summarize->add_option("--terms", terms, "Word-cloud terms per super-node")->capture_default_str();

  auto* layout = app.add_subcommand("layout", "Two-step layout of one summary level");
  add_common(layout, true);
  corpus_in.add_to(*layout);
  layout_in.add_to(*layout);
  layout->add_option("--hierarchy", hierarchy_path, "Hierarchy JSON written by train");
  layout->add_option("--level", level, "Level to lay out; negative selects the deepest")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Score every level of a hierarchy");
  add_common(evaluate, false);
  corpus_in.add_to(*evaluate);
  feedback_in.add_to(*evaluate);
  evaluate->add_option("--hierarchy", hierarchy_path, "Hierarchy JSON written by train");

  ExperimentConfig experiment;
  std::size_t seed_count = 1;
  std::vector<std::string> methods{"netreact", "spectral", "random"};
  std::vector<int> targets{2, 4, 8, 16};
  bool write_corpora = false;
  auto* simulate = app.add_subcommand("simulate", "Synthetic simulated-feedback experiment");
  add_common(simulate, true);
  hp_in.add_to(*simulate);
  simulate->add_option("--seeds", seed_count, "Number of consecutive seeds starting at --seed")->capture_default_str();
  simulate->add_option("--methods", methods, "Methods: netreact, spectral, random")->capture_default_str();
  simulate->add_option("--targets", targets, "Group counts from {2,4,8,16}")->capture_default_str();
  simulate->add_option("--p-pos", experiment.p_pos, "Share of positive pairs sampled")->capture_default_str();
  simulate->add_option("--p-neg", experiment.p_neg, "Share of negative pairs sampled")->capture_default_str();
  simulate->add_option("--relevant", experiment.corpus.n_relevant, "Relevant documents")->capture_default_str();
  simulate->add_option("--irrelevant", experiment.corpus.n_irrelevant, "Irrelevant documents")->capture_default_str();
  simulate->add_option("--topics", experiment.corpus.n_topics, "Planted topics")->capture_default_str();
  simulate->add_option("--story-weight", experiment.corpus.story_weight, "Story-pool word share")
      ->capture_default_str();
  simulate->add_option("--topic-weight", experiment.corpus.topic_weight, "Topic-pool word share")
      ->capture_default_str();
  simulate->add_flag("--write-corpora", write_corpora, "Also write each seed's corpus and feedback");

  std::string root = "sessions";
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the session HTTP API");
  serve->add_option("--config", config_path, "JSON config file; explicit flags take precedence");
  serve->add_option("--root", root, "Session directory")->capture_default_str();
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--port", port, "Listen port (0 picks a free port)")->capture_default_str();
  hp_in.add_to(*serve);
  layout_in.add_to(*serve);

  std::vector<std::string> args;
  try {
    args = raw_args.size() >= 2 ? expand_config(raw_args) : raw_args;
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << error_body(e).dump() << '\n';
    return kExitRuntime;
  }

  auto finish = [&](const CLI::App* sub, const nlohmann::json& extra) {
    write_text(fs::path(out_dir) / "run_config.json", echo_config(*sub, extra).dump(2) + "\n");
  };

  try {
    if (*build_graph) {
      require(out_dir, "--out");
      const auto corpus = corpus_in.load();
      const auto graph = build_document_graph(corpus);
      write_text(fs::path(out_dir) / "graph.edges", export_edge_list(graph));
      finish(build_graph, {});
      std::size_t edges = 0;
      for (std::size_t i = 0; i < graph.size(); ++i) {
        for (std::size_t j = i + 1; j < graph.size(); ++j) edges += graph.weight(i, j) > 0.0;
      }
      out << "graph: " << graph.size() << " documents, " << edges << " edges -> "
          << (fs::path(out_dir) / "graph.edges").string() << '\n';
    } else if (*train) {
      require(out_dir, "--out");
      const auto corpus = corpus_in.load();
      const auto fb = feedback_in.load();
      const auto hp = hp_in.resolve();
      const auto graph = build_document_graph(corpus);
      const auto h = hierarchical_summarize(graph, fb, target, hp, seed);
      const fs::path dir(out_dir);
      write_text(dir / "hierarchy.json", h.to_json(graph).dump(2) + "\n");
      for (const auto& [path, model] : h.models) {
        write_text(dir / "models" / (path.empty() ? std::string("root.json") : "b" + path + ".json"),
                   model.to_json().dump() + "\n");
      }
      finish(train, {{"hyperparameters", hp.to_json()}});
      for (const auto& lv : h.levels) {
        out << "level " << lv.level << ": k=" << lv.assignment.k << " f_prob=" << lv.f_prob << " satisfied "
            << lv.satisfaction.satisfied << "/" << lv.satisfaction.total << '\n';
      }
    } else if (*summarize) {
      require(out_dir, "--out");
      const auto corpus = corpus_in.load();
      const auto fb = feedback_in.load();
      const auto graph = build_document_graph(corpus);
      const auto h = load_hierarchy(hierarchy_path, graph, fb);
      const std::size_t chosen = level < 0 ? select_best_level(h) : resolve_level(h, level);
      const auto& lv = h.levels[chosen];
      const auto vectors = tfidf(corpus);
      auto supernodes = nlohmann::json::array();
      for (std::size_t g = 0; g < lv.summary.size(); ++g) {
        std::set<std::string> members;
        for (auto m : lv.summary.supernodes[g]) members.insert(graph.ids()[m]);
        auto cloud = nlohmann::json::array();
        for (const auto& [term, weight] : top_terms(corpus, vectors, members, terms)) {
          cloud.push_back({{"term", term}, {"weight", weight}});
        }
        supernodes.push_back({{"label", lv.summary.source_labels[g]}, {"members", members}, {"top_terms", cloud}});
      }
      nlohmann::json summary{{"v", 1},
                             {"level", lv.level},
                             {"k", lv.assignment.k},
                             {"f_prob", lv.f_prob},
                             {"satisfaction", satisfaction_json(lv.satisfaction)},
                             {"supernodes", supernodes}};
      summary["superedges"] = h.to_json(graph).at("levels").at(chosen).at("superedges");
      write_text(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
      finish(summarize, {});
      out << "level " << lv.level << " with " << lv.summary.size() << " super-nodes, satisfied "
          << lv.satisfaction.satisfied << "/" << lv.satisfaction.total << '\n';
    } else if (*layout) {
      require(out_dir, "--out");
      const auto corpus = corpus_in.load();
      const auto graph = build_document_graph(corpus);
      const auto h = load_hierarchy(hierarchy_path, graph, FeedbackGraphs{});
      const auto& lv = h.levels[resolve_level(h, level)];
      const auto config = layout_in.resolve(seed);
      auto result = two_step_layout(graph, lv.assignment, lv.summary, config).to_json();
      result["level"] = lv.level;
      write_text(fs::path(out_dir) / "layout.json", result.dump(2) + "\n");
      finish(layout, {});
      out << "layout of level " << lv.level << " -> " << (fs::path(out_dir) / "layout.json").string() << '\n';
    } else if (*evaluate) {
      require(out_dir, "--out");
      const auto corpus = corpus_in.load();
      const auto fb = feedback_in.load();
      const auto graph = build_document_graph(corpus);
      const auto h = load_hierarchy(hierarchy_path, graph, fb);
      const auto truth = GroundTruth::from_corpus(corpus);
      auto levels = nlohmann::json::array();
      for (const auto& lv : h.levels) {
        nlohmann::json row{{"level", lv.level},
                           {"k", lv.assignment.k},
                           {"f_prob", lv.f_prob},
                           {"satisfaction", satisfaction_json(lv.satisfaction)}};
        if (!truth.relevant.empty()) row["rho"] = purity_rho(lv.assignment, graph.ids(), truth);
        out << "level " << lv.level << ": f_prob=" << lv.f_prob << " satisfied=" << lv.satisfaction.ratio();
        if (row.contains("rho")) out << " rho=" << row["rho"].get<double>();
        out << '\n';
        levels.push_back(row);
      }
      write_text(fs::path(out_dir) / "evaluation.json",
                 nlohmann::json{{"v", 1}, {"levels", levels}}.dump(2) + "\n");
      finish(evaluate, {});
    } else if (*simulate) {
      require(out_dir, "--out");
      if (seed_count == 0) throw UsageError("--seeds must be positive");
      experiment.methods.clear();
      for (const auto& m : methods) {
        const auto parsed = parse_method(m);
        if (!parsed) throw UsageError("unknown method \"" + m + "\"");
        experiment.methods.push_back(*parsed);
      }
      experiment.targets = targets;
      experiment.seeds.clear();
      for (std::size_t i = 0; i < seed_count; ++i) experiment.seeds.push_back(seed + i);
      experiment.hyperparameters = hp_in.resolve();
      experiment.validate();
      const auto report = run_experiment(experiment);
      const fs::path dir(out_dir);
      write_text(dir / "report.json", report.to_json().dump(2) + "\n");
      write_text(dir / "report.csv", report.to_csv());
      write_text(dir / "satisfied_plot.csv", report.satisfied_plot_csv());
      write_text(dir / "rho_plot.csv", report.rho_plot_csv());
      if (write_corpora) {
        for (auto s : experiment.seeds) {
          Rng corpus_rng(derive_seed(s, "corpus"));
          const auto syn = generate_synthetic_corpus(experiment.corpus, corpus_rng);
          Rng feedback_rng(derive_seed(s, "feedback"));
          const auto fb =
              sample_feedback(syn.truth, syn.corpus.ids(), experiment.p_pos, experiment.p_neg, feedback_rng);
          write_text(dir / "corpora" / ("seed-" + std::to_string(s) + ".jsonl"), to_jsonl(syn.corpus));
          write_text(dir / "corpora" / ("seed-" + std::to_string(s) + ".feedback.json"), fb.to_json().dump(2) + "\n");
        }
      }
      finish(simulate, {{"hyperparameters", experiment.hyperparameters.to_json()}});
      for (const auto& row : report.rows) {
        out << to_string(row.method) << " K=" << row.target << " seed=" << row.seed << " rho=" << row.rho
            << " satisfied=" << row.satisfied_ratio << " f_prob=" << row.f_prob << '\n';
      }
    } else if (*serve) {
      StoreOptions options;
      options.hyperparameters = hp_in.resolve();
      options.layout = layout_in.resolve(1);
      SessionStore store(root, options);
      ApiServer server(store);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error("cannot listen on " + host + ":" + std::to_string(port));
      out << "serving " << root << " on http://" << host << ":" << bound << std::endl;
      g_server = &server;
      std::signal(SIGINT, handle_stop_signal);
      std::signal(SIGTERM, handle_stop_signal);
      server.listen();
      g_server = nullptr;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << error_body(e).dump() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cli_main(int argc, char** argv) {
  return cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace netsumm
