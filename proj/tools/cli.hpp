#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cfgevade/attack.hpp"
#include "cfgevade/attribution.hpp"
#include "cfgevade/corpus.hpp"
#include "cfgevade/error.hpp"
#include "cfgevade/model.hpp"
#include "cfgevade/params_io.hpp"
#include "cfgevade/report.hpp"
#include "cfgevade/tokenizer.hpp"
#include "cfgevade/train.hpp"

namespace cfgevade::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr const char* kSeedEnv = "CFGEVADE_SEED";

inline std::size_t default_threads() {
  const auto n = std::thread::hardware_concurrency();
  return n ? n : 1;
}

// Everything a subcommand may need. Precedence, lowest first: built-in
// defaults, --config file, CFGEVADE_SEED, command-line flags.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = default_threads();
  std::size_t max_calls = 16;
  std::size_t vocab_size = 2048;
  CorpusConfig corpus;
  ModelConfig model;
  TrainConfig train;
  AttackConfig attack;
  std::vector<std::size_t> rounds{1};
};

namespace detail {

template <typename T>
void take(const Json& obj, const std::string& section, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("config key '" + section + key + "' has the wrong type");
  }
}

inline void reject_unknown(const Json& obj, const std::string& section, const std::set<std::string>& known) {
  if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (!known.contains(k)) throw ConfigError("unknown config key '" + section + k + "'");
  }
}

inline const Json* section(const Json& root, const char* name, const std::set<std::string>& known) {
  if (!root.contains(name)) return nullptr;
  const Json& s = root.at(name);
  reject_unknown(s, std::string(name) + ".", known);
  return &s;
}

}  // namespace detail

inline void apply_config_json(RunConfig& rc, const Json& root) {
  using detail::take;
  detail::reject_unknown(root, "", {"seed", "threads", "max_calls", "corpus", "vocab", "model", "train", "attack"});
  take(root, "", "seed", rc.seed);
  take(root, "", "threads", rc.threads);
  take(root, "", "max_calls", rc.max_calls);
  if (const auto* s = detail::section(root, "corpus",
                                      {"benign", "malicious", "min_nodes", "max_nodes", "edge_density",
                                       "signal_strength", "tail_rate", "tail_import_share"})) {
    take(*s, "corpus.", "benign", rc.corpus.n_benign);
    take(*s, "corpus.", "malicious", rc.corpus.n_malicious);
    take(*s, "corpus.", "min_nodes", rc.corpus.min_nodes);
    take(*s, "corpus.", "max_nodes", rc.corpus.max_nodes);
    take(*s, "corpus.", "edge_density", rc.corpus.edge_density);
    take(*s, "corpus.", "signal_strength", rc.corpus.signal_strength);
    take(*s, "corpus.", "tail_rate", rc.corpus.tail_rate);
    take(*s, "corpus.", "tail_import_share", rc.corpus.tail_import_share);
  }
  if (const auto* s = detail::section(root, "vocab", {"size"})) take(*s, "vocab.", "size", rc.vocab_size);
  if (const auto* s = detail::section(root, "model", {"d_model", "layers", "heads", "ff_dim", "max_positions"})) {
    take(*s, "model.", "d_model", rc.model.d_model);
    take(*s, "model.", "layers", rc.model.layers);
    take(*s, "model.", "heads", rc.model.heads);
    take(*s, "model.", "ff_dim", rc.model.ff_dim);
    take(*s, "model.", "max_positions", rc.model.max_positions);
  }
  if (const auto* s = detail::section(root, "train", {"batch_size", "epochs", "learning_rate", "train_fraction"})) {
    take(*s, "train.", "batch_size", rc.train.batch_size);
    take(*s, "train.", "epochs", rc.train.epochs);
    take(*s, "train.", "learning_rate", rc.train.learning_rate);
    take(*s, "train.", "train_fraction", rc.train.train_fraction);
  }
  if (const auto* s = detail::section(root, "attack", {"rounds", "trials", "samples", "ig_steps"})) {
    if (s->contains("rounds") && s->at("rounds").is_number_unsigned()) {
      rc.rounds = {s->at("rounds").get<std::size_t>()};
    } else {
      take(*s, "attack.", "rounds", rc.rounds);
    }
    take(*s, "attack.", "trials", rc.attack.trials);
    take(*s, "attack.", "samples", rc.attack.sample_limit);
    take(*s, "attack.", "ig_steps", rc.attack.ig_steps);
  }
}

inline std::uint64_t parse_seed(const std::string& text, const std::string& origin) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') {
    throw ConfigError(origin + " must be an unsigned 64-bit integer, got '" + text + "'");
  }
  return v;
}

// Flags as parsed; unset ones leave the lower layers alone.
struct Flags {
  std::string config;
  std::optional<std::string> seed;
  std::optional<std::size_t> threads, max_calls;
  // paths
  std::string out, corpus, vocab, weights, split, sample;
  std::vector<std::string> inputs;
  bool force = false, outcomes = false;
  // corpus
  std::optional<std::size_t> benign, malicious, min_nodes, max_nodes;
  std::optional<double> signal, density, tail_rate;
  // vocab / model / train
  std::optional<std::size_t> vocab_size, d_model, layers, heads, ff_dim, max_positions, epochs, batch_size;
  std::optional<double> lr, train_fraction;
  // attack / explain
  std::vector<std::size_t> rounds;
  std::optional<std::size_t> trials, samples, ig_steps;
};

inline RunConfig resolve(const Flags& f) {
  RunConfig rc;
  if (!f.config.empty()) {
    Json root;
    try {
      root = Json::parse(read_file(f.config));
    } catch (const Json::parse_error& e) {
      throw MalformedJson(f.config + ": " + e.what());
    }
    apply_config_json(rc, root);
  }
  if (const char* env = std::getenv(kSeedEnv); env && *env) rc.seed = parse_seed(env, kSeedEnv);
  if (f.seed) rc.seed = parse_seed(*f.seed, "--seed");
  auto set = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  set(rc.threads, f.threads);
  set(rc.max_calls, f.max_calls);
  set(rc.corpus.n_benign, f.benign);
  set(rc.corpus.n_malicious, f.malicious);
  set(rc.corpus.min_nodes, f.min_nodes);
  set(rc.corpus.max_nodes, f.max_nodes);
  set(rc.corpus.signal_strength, f.signal);
  set(rc.corpus.edge_density, f.density);
  set(rc.corpus.tail_rate, f.tail_rate);
  set(rc.vocab_size, f.vocab_size);
  set(rc.model.d_model, f.d_model);
  set(rc.model.layers, f.layers);
  set(rc.model.heads, f.heads);
  set(rc.model.ff_dim, f.ff_dim);
  set(rc.model.max_positions, f.max_positions);
  set(rc.train.epochs, f.epochs);
  set(rc.train.batch_size, f.batch_size);
  set(rc.train.learning_rate, f.lr);
  set(rc.train.train_fraction, f.train_fraction);
  if (!f.rounds.empty()) rc.rounds = f.rounds;
  set(rc.attack.trials, f.trials);
  set(rc.attack.sample_limit, f.samples);
  set(rc.attack.ig_steps, f.ig_steps);

  if (rc.threads < 1) throw ConfigError("threads must be >= 1");
  if (rc.max_calls < 1) throw ConfigError("max calls must be >= 1");
  if (rc.rounds.empty()) throw ConfigError("at least one rounds value is required");
  rc.corpus.seed = rc.seed;
  rc.train.seed = rc.seed;
  rc.train.threads = rc.threads;
  rc.attack.seed = rc.seed;
  rc.attack.threads = rc.threads;
  return rc;
}

// ---- shared loading helpers

inline std::vector<FunctionSequence> load_sequences(const std::string& dir, const RunConfig& rc) {
  if (dir.empty()) throw ConfigError("--corpus is required");
  auto seqs = linearize_all(load_corpus(dir), rc.max_calls);
  if (seqs.empty()) throw DataError("corpus " + dir + " contains no graphs");
  return seqs;
}

inline Vocab load_vocab(const std::string& path) {
  if (path.empty()) throw ConfigError("--vocab is required");
  return Vocab::from_text(read_file(path));
}

inline LoadedModel load_model(const std::string& path, const Vocab& vocab) {
  if (path.empty()) throw ConfigError("--weights is required");
  auto m = load_params(read_file(path));
  if (m.config.vocab_size != vocab.size()) {
    throw ShapeMismatch("weights expect a vocab of " + std::to_string(m.config.vocab_size) + " tokens, vocab file has " +
                        std::to_string(vocab.size()));
  }
  return m;
}

// Restricts to the held-out names recorded by `train` when a split file is given.
inline std::vector<FunctionSequence> apply_split(std::vector<FunctionSequence> seqs, const std::string& split_path) {
  if (split_path.empty()) return seqs;
  Json j;
  try {
    j = Json::parse(read_file(split_path));
  } catch (const Json::parse_error& e) {
    throw MalformedJson(split_path + ": " + e.what());
  }
  if (!j.contains("eval") || !j.at("eval").is_array()) throw SchemaViolation(split_path + ": missing 'eval' list");
  std::set<std::string> keep;
  for (const auto& n : j.at("eval")) keep.insert(n.get<std::string>());
  std::vector<FunctionSequence> out;
  for (auto& s : seqs) {
    if (keep.contains(s.name)) out.push_back(std::move(s));
  }
  if (out.size() != keep.size()) {
    throw DataError(split_path + ": " + std::to_string(keep.size() - out.size()) +
                    " held-out samples are missing from the corpus");
  }
  return out;
}

inline std::vector<FunctionSequence> training_part(const std::vector<FunctionSequence>& seqs, const RunConfig& rc) {
  const auto split = split_indices(seqs.size(), rc.train.train_fraction, rc.seed);
  std::vector<FunctionSequence> out;
  for (const auto i : split.train) out.push_back(seqs[i]);
  return out;
}

inline std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
  return value;
}

// ---- subcommands

inline int cmd_gen_corpus(const Flags& f) {
  const auto rc = resolve(f);
  const fs::path out = require(f.out, "--out");
  for (const char* sub : {"benign", "malicious"}) {
    if (!fs::is_directory(out / sub)) continue;
    for (const auto& e : fs::directory_iterator(out / sub)) {
      if (!e.path().filename().string().ends_with(kCfgExtension)) continue;
      if (!f.force) throw DataError(out.string() + " already holds a corpus; pass --force to replace it");
      fs::remove(e.path());
    }
  }
  const auto graphs = synth_corpus(rc.corpus);
  write_corpus(out, graphs);
  std::cerr << "wrote " << graphs.size() << " graphs to " << out.string() << "\n";
  return kExitOk;
}

inline int cmd_build_vocab(const Flags& f) {
  const auto rc = resolve(f);
  const auto seqs = load_sequences(f.corpus, rc);
  const auto vocab = build_vocab(training_part(seqs, rc), rc.vocab_size, import_name_charset());
  write_file(require(f.out, "--out"), vocab.to_text());
  std::cerr << "vocab: " << vocab.size() << " tokens\n";
  return kExitOk;
}

inline int cmd_train(const Flags& f) {
  const auto rc = resolve(f);
  const fs::path out = require(f.out, "--out");
  const auto seqs = load_sequences(f.corpus, rc);
  const auto vocab = load_vocab(f.vocab);
  ModelConfig mcfg = rc.model;
  mcfg.vocab_size = vocab.size();
  mcfg.validate();
  std::vector<TokenizedSample> encoded;
  encoded.reserve(seqs.size());
  for (const auto& s : seqs) encoded.push_back(encode_sequence(vocab, s, mcfg.max_positions));

  std::string log;
  const auto result = train(encoded, rc.train, mcfg, [&](const EpochLog& e) {
    const Json line{{"epoch", e.epoch},        {"train_loss", e.train_loss}, {"eval_accuracy", e.eval.accuracy},
                    {"eval_fpr", e.eval.fpr},  {"tp", e.eval.tp},            {"tn", e.eval.tn},
                    {"fp", e.eval.fp},         {"fn", e.eval.fn}};
    log += line.dump() + "\n";
    std::cout << line.dump() << std::endl;
  });

  Json split{{"seed", rc.seed}, {"train_fraction", rc.train.train_fraction}, {"train", Json::array()},
             {"eval", Json::array()}};
  for (const auto i : result.split.train) split["train"].push_back(seqs[i].name);
  for (const auto i : result.split.eval) split["eval"].push_back(seqs[i].name);

  write_file(out / "model.bin", save_params(result.params, mcfg));
  write_file(out / "train_log.ndjson", log);
  write_file(out / "split.json", split.dump(2) + "\n");
  return kExitOk;
}

inline int cmd_eval(const Flags& f) {
  const auto rc = resolve(f);
  const auto vocab = load_vocab(f.vocab);
  const auto model = load_model(f.weights, vocab);
  const auto seqs = apply_split(load_sequences(f.corpus, rc), f.split);
  std::vector<TokenizedSample> encoded;
  for (const auto& s : seqs) encoded.push_back(encode_sequence(vocab, s, model.config.max_positions));
  const auto m = evaluate(model.params, model.config, encoded, rc.threads);
  const Json j{{"samples", encoded.size()}, {"accuracy", m.accuracy}, {"fpr", m.fpr},
               {"tp", m.tp},                {"tn", m.tn},             {"fp", m.fp},
               {"fn", m.fn}};
  std::cout << j.dump(2) << "\n";
  if (!f.out.empty()) write_file(fs::path(f.out) / "eval.json", j.dump(2) + "\n");
  return kExitOk;
}

inline int cmd_explain(const Flags& f) {
  const auto rc = resolve(f);
  const auto vocab = load_vocab(f.vocab);
  const auto model = load_model(f.weights, vocab);
  const auto seqs = load_sequences(f.corpus, rc);
  const auto name = require(f.sample, "--sample");
  const auto it = std::find_if(seqs.begin(), seqs.end(), [&](const auto& s) { return s.name == name; });
  if (it == seqs.end()) throw DataError("sample '" + name + "' not found in corpus");
  const auto sample = encode_sequence(vocab, *it, model.config.max_positions);
  const TransformerClassifier clf(model.params, model.config);
  auto j = to_json(explain(clf, sample, rc.attack.ig_steps));
  j["p_malicious"] = clf.predict(sample).p_malicious();
  std::cout << j.dump(2) << "\n";
  if (!f.out.empty()) write_file(fs::path(f.out) / "explain.json", j.dump(2) + "\n");
  return kExitOk;
}

inline void write_report(const fs::path& dir, const std::vector<CampaignStats>& campaigns, Json config) {
  Json j = report_json(campaigns);
  if (!config.is_null()) j["config"] = std::move(config);
  const auto table = render_table(campaigns);
  write_file(dir / "report.json", j.dump(2) + "\n");
  write_file(dir / "report.txt", table);
  std::cout << table;
}

inline int cmd_attack(const Flags& f) {
  const auto rc = resolve(f);
  const fs::path out = require(f.out, "--out");
  const auto vocab = load_vocab(f.vocab);
  const auto model = load_model(f.weights, vocab);
  const auto seqs = apply_split(load_sequences(f.corpus, rc), f.split);
  const TransformerClassifier clf(model.params, model.config);

  std::vector<CampaignStats> campaigns;
  std::string outcomes;
  for (const auto rounds : rc.rounds) {
    AttackConfig cfg = rc.attack;
    cfg.rounds = rounds;
    const auto result = run_campaign(clf, vocab, model.config.max_positions, seqs, cfg);
    campaigns.push_back(result.stats);
    if (f.outcomes) {
      for (std::size_t t = 0; t < result.outcomes.size(); ++t) {
        for (const auto& o : result.outcomes[t]) {
          auto line = to_json(o, t);
          line["rounds_limit"] = rounds;
          outcomes += line.dump() + "\n";
        }
      }
    }
  }
  // Thread count is left out on purpose: it must not change the bytes.
  const Json config{{"seed", rc.seed},          {"rounds", rc.rounds}, {"trials", rc.attack.trials},
                    {"samples", rc.attack.sample_limit}, {"ig_steps", rc.attack.ig_steps},
                    {"max_calls", rc.max_calls}, {"held_out_only", !f.split.empty()}};
  write_report(out, campaigns, config);
  if (f.outcomes) write_file(out / "outcomes.ndjson", outcomes);
  return kExitOk;
}

inline int cmd_report(const Flags& f) {
  if (f.inputs.empty()) throw ConfigError("--in is required");
  std::vector<CampaignStats> campaigns;
  for (const auto& path : f.inputs) {
    Json j;
    try {
      j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
      throw MalformedJson(path + ": " + e.what());
    }
    for (auto& c : campaigns_from_json(j)) campaigns.push_back(std::move(c));
  }
  if (campaigns.empty()) throw DataError("no campaigns to report");
  std::stable_sort(campaigns.begin(), campaigns.end(),
                   [](const auto& a, const auto& b) { return a.rounds < b.rounds; });
  if (f.out.empty()) {
    std::cout << render_table(campaigns);
  } else {
    write_report(f.out, campaigns, Json());
  }
  return kExitOk;
}

// ---- entry point

inline int run(int argc, char** argv) {
  CLI::App app{"Explainability-guided evasion of CFG-based malware classifiers"};
  app.name("cfgevade");
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");
  Flags f;

  const std::map<std::string, std::string> descriptions{
      {"gen-corpus", "generate a synthetic labeled CFG corpus"},
      {"build-vocab", "build the sub-word vocabulary from the training split"},
      {"train", "train the transformer classifier"},
      {"eval", "report accuracy and false-positive rate"},
      {"explain", "integrated-gradients attribution for one sample"},
      {"attack", "run replacement-attack campaigns and write a report"},
      {"report", "re-render one or more report.json files"}};
  std::map<std::string, CLI::App*> sub;
  for (const auto& [name, desc] : descriptions) {
    auto* s = app.add_subcommand(name, desc);
    s->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    s->add_option("--seed", f.seed, "global seed (overrides CFGEVADE_SEED)");
    s->add_option("--threads", f.threads, "worker threads");
    sub[name] = s;
  }
  auto max_calls = [&](CLI::App* s) { s->add_option("--max-calls", f.max_calls, "DFS window size"); };

  auto* g = sub["gen-corpus"];
  g->add_option("--out", f.out, "output directory")->required();
  g->add_option("--benign", f.benign, "number of benign graphs");
  g->add_option("--malicious", f.malicious, "number of malicious graphs");
  g->add_option("--min-nodes", f.min_nodes);
  g->add_option("--max-nodes", f.max_nodes);
  g->add_option("--signal", f.signal, "fraction of label-specific names");
  g->add_option("--density", f.density, "extra forward-edge probability");
  g->add_option("--tail-rate", f.tail_rate, "share of non-specific nodes with binary-specific names");
  g->add_flag("--force", f.force, "replace an existing corpus in --out");

  auto* b = sub["build-vocab"];
  b->add_option("--corpus", f.corpus)->required();
  b->add_option("--out", f.out, "vocab file")->required();
  b->add_option("--size", f.vocab_size, "maximum vocab size");
  b->add_option("--train-fraction", f.train_fraction);
  max_calls(b);

  auto* t = sub["train"];
  t->add_option("--corpus", f.corpus)->required();
  t->add_option("--vocab", f.vocab)->required();
  t->add_option("--out", f.out, "directory for model.bin, train_log.ndjson, split.json")->required();
  t->add_option("--epochs", f.epochs);
  t->add_option("--batch-size", f.batch_size);
  t->add_option("--lr", f.lr);
  t->add_option("--train-fraction", f.train_fraction);
  t->add_option("--d-model", f.d_model);
  t->add_option("--layers", f.layers);
  t->add_option("--heads", f.heads);
  t->add_option("--ff-dim", f.ff_dim);
  t->add_option("--max-positions", f.max_positions);
  max_calls(t);

  for (const char* name : {"eval", "explain", "attack"}) {
    auto* s = sub[name];
    s->add_option("--corpus", f.corpus)->required();
    s->add_option("--vocab", f.vocab)->required();
    s->add_option("--weights", f.weights)->required();
    max_calls(s);
  }
  sub["eval"]->add_option("--split", f.split, "split.json from train; restricts to held-out samples");
  sub["eval"]->add_option("--out", f.out);

  auto* x = sub["explain"];
  x->add_option("--sample", f.sample, "sample name")->required();
  x->add_option("--steps", f.ig_steps, "integration steps");
  x->add_option("--out", f.out);

  auto* a = sub["attack"];
  a->add_option("--split", f.split, "split.json from train; restricts to held-out samples");
  a->add_option("--rounds", f.rounds, "round limits, one campaign each")->delimiter(',');
  a->add_option("--trials", f.trials);
  a->add_option("--samples", f.samples, "samples attacked per trial");
  a->add_option("--ig-steps", f.ig_steps);
  a->add_option("--out", f.out, "report directory")->required();
  a->add_flag("--outcomes", f.outcomes, "also write outcomes.ndjson");

  auto* r = sub["report"];
  r->add_option("--in", f.inputs, "report.json files")->required();
  r->add_option("--out", f.out, "write report.json and report.txt here");

  if (argc > 1 && argv[1][0] != '-' && !descriptions.contains(argv[1])) {
    std::cerr << UnknownSubcommand(std::string("'") + argv[1] + "'").what() << "\n\n" << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen_corpus(f);
    if (b->parsed()) return cmd_build_vocab(f);
    if (t->parsed()) return cmd_train(f);
    if (sub["eval"]->parsed()) return cmd_eval(f);
    if (x->parsed()) return cmd_explain(f);
    if (a->parsed()) return cmd_attack(f);
    if (r->parsed()) return cmd_report(f);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace cfgevade::cli
