// Copyright 2026 The kgbias Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// kgbias command-line tool.
//
//   kgbias generate          --preset wikikg2-like --out data/wiki
//   kgbias train             --graph data/wiki --sf autoweird --out runs/aw
//   kgbias eval              --graph data/wiki --checkpoint runs/aw/checkpoint.bin
//   kgbias compare-protocols --graph data/wiki --scorer entoccur --checkpoint a,b
//   kgbias search            --graph data/wiki --budget 10 --out runs/search
//   kgbias analyze           --graph data/wiki --out runs/stats

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgbias/baseline.hpp"
#include "kgbias/error.hpp"
#include "kgbias/eval.hpp"
#include "kgbias/search.hpp"
#include "kgbias/search_space.hpp"
#include "kgbias/train.hpp"
#include "run_config.hpp"

namespace kgbias::cli {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw IoError("short write to " + path.string());
}

fs::path require_path(const RunConfig& cfg, std::string_view key) {
  const std::string& v = cfg.get(key);
  if (v.empty()) throw ConfigError("--" + std::string(key) + " is required");
  return v;
}

fs::path output_dir(const RunConfig& cfg) {
  const fs::path out = require_path(cfg, "out");
  fs::create_directories(out);
  return out;
}

KnowledgeGraph load_augmented(const RunConfig& cfg) {
  KnowledgeGraph g = load_graph(require_path(cfg, "graph"));
  return g.augmented() ? g : add_inverse_relations(g);
}

// Scores every triple known in any split above every other triple.
class OracleScorer final : public Scorer {
 public:
  explicit OracleScorer(KnownTriples known) : known_(std::move(known)) {}

  void score_tails(EntityId head, RelationId relation, std::span<const EntityId> tails,
                   std::span<double> out) const override {
    for (std::size_t i = 0; i < tails.size(); ++i) {
      out[i] = known_.contains(head, relation, tails[i]) ? 1.0 : 0.0;
    }
  }
  std::string name() const override { return "oracle"; }

 private:
  KnownTriples known_;
};

struct NamedScorer {
  std::string label;
  std::unique_ptr<Scorer> scorer;
};

std::vector<NamedScorer> make_scorers(const RunConfig& cfg, const KnowledgeGraph& g) {
  std::vector<NamedScorer> out;
  for (const auto& name : cfg.list("scorer")) {
    if (name == "entoccur") {
      out.push_back({name, std::make_unique<EntOccurModel>(
                               fit_entoccur(g, {cfg.flag("entoccur_tiebreak"), 1e-6}))});
    } else if (name == "oracle") {
      out.push_back({name, std::make_unique<OracleScorer>(build_filter(g, FilterScope::kAllSplits))});
    } else {
      throw ConfigError("unknown scorer '" + name + "' (expected entoccur or oracle)");
    }
  }
  for (const auto& path : cfg.list("checkpoint")) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.store.entity_count() != g.entity_count() ||
        ck.store.relation_count() != g.relation_count()) {
      throw ConfigError("checkpoint " + path + " has " + std::to_string(ck.store.entity_count()) +
                        " entities and " + std::to_string(ck.store.relation_count()) +
                        " relations; the graph has " + std::to_string(g.entity_count()) + " and " +
                        std::to_string(g.relation_count()));
    }
    const ScoringFunction sf = parse_sf(ck.spec);
    out.push_back({path, std::make_unique<EmbeddingScorer>(std::move(ck.store), sf)});
  }
  if (out.empty()) throw ConfigError("no scorer given: use --checkpoint or --scorer");
  return out;
}

int cmd_generate(const RunConfig& cfg) {
  const KnowledgeGraph g = generate_synthetic(cfg.synthetic());
  const fs::path out = output_dir(cfg);
  save_graph(g, out);
  cfg.write(out);
  std::printf("%s: %u entities, %u relations, %zu/%zu/%zu train/valid/test triples\n",
              out.string().c_str(), g.entity_count(), g.relation_count(), g.train().size(),
              g.valid().size(), g.test().size());
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const KnowledgeGraph g = load_augmented(cfg);
  if (cfg.get("sf").empty()) throw ConfigError("--sf is required");
  const ScoringFunction sf = resolve_sf(cfg.get("sf"));
  const TrainConfig tc = cfg.train();
  const fs::path out = output_dir(cfg);
  const TrainResult result = train(g, sf, tc, [](const ValidationPoint& p) {
    std::fprintf(stderr, "step %llu valid_mrr %.6f\n", static_cast<unsigned long long>(p.step),
                 p.valid_mrr);
  });

  save_checkpoint(out / "checkpoint.bin", result.store, sf, tc.seed);
  write_file(out / "curve.csv", result.report.csv());
  ordered_json report;
  report["spec"] = print_sf(sf);
  report["uses_head"] = uses_head(sf);
  report["seed"] = tc.seed;
  report["dim"] = tc.dim;
  report["steps"] = tc.max_steps;
  report["best_step"] = result.report.best_step;
  report["best_valid_mrr"] = result.report.best_valid_mrr;
  write_file(out / "report.json", report.dump(2) + "\n");
  ordered_json timing;
  timing["train_seconds"] = result.report.seconds;
  write_file(out / "timing.json", timing.dump(2) + "\n");
  cfg.write(out);
  std::printf("%s best_valid_mrr %.6f at step %llu\n", print_sf(sf).c_str(),
              result.report.best_valid_mrr, static_cast<unsigned long long>(result.report.best_step));
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  const KnowledgeGraph g = load_augmented(cfg);
  const auto scorers = make_scorers(cfg, g);
  if (scorers.size() != 1) throw ConfigError("eval takes exactly one scorer");
  const EvalProtocol protocol = cfg.protocol();
  const Split split = cfg.split();
  const RankingMetrics m = evaluate(*scorers[0].scorer, g, split, protocol);
  const std::string json = metrics_json(m, protocol, split, scorers[0].scorer->name()) + "\n";
  std::fputs(json.c_str(), stdout);
  if (!cfg.get("out").empty()) {
    const fs::path out = output_dir(cfg);
    write_file(out / "metrics.json", json);
    cfg.write(out);
  }
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  const KnowledgeGraph g = load_augmented(cfg);
  const auto scorers = make_scorers(cfg, g);
  const Split split = cfg.split();
  const EvalProtocol configured = cfg.protocol();
  const std::uint32_t n =
      configured.mode == ProtocolMode::kFullRanking ? 500 : configured.num_negatives;
  std::vector<std::string> labels{"sampled:" + std::to_string(n)};
  if (g.typed()) labels.push_back("typed:" + std::to_string(n));
  labels.push_back("full");

  ordered_json rows = ordered_json::array();
  std::string text;
  char line[512];
  std::snprintf(line, sizeof(line), "%-40s %-12s %8s %8s %8s %8s\n", "scorer", "protocol", "mrr",
                "hits@1", "hits@3", "hits@10");
  text += line;
  for (const auto& s : scorers) {
    for (const auto& label : labels) {
      const EvalProtocol p = cfg.protocol(label);
      const RankingMetrics m = evaluate(*s.scorer, g, split, p);
      ordered_json row;
      row["scorer"] = s.label;
      row["spec"] = s.scorer->name();
      row["protocol"] = label;
      row["mrr"] = m.mrr;
      row["hits1"] = m.hits1;
      row["hits3"] = m.hits3;
      row["hits10"] = m.hits10;
      row["num_queries"] = m.num_queries;
      rows.push_back(row);
      std::snprintf(line, sizeof(line), "%-40s %-12s %8.4f %8.4f %8.4f %8.4f\n", s.label.c_str(),
                    label.c_str(), m.mrr, m.hits1, m.hits3, m.hits10);
      text += line;
    }
  }
  ordered_json doc;
  doc["split"] = split_name(split);
  doc["seed"] = cfg.u64("seed");
  doc["filtered"] = configured.filtered;
  doc["rows"] = rows;
  std::fputs(text.c_str(), stdout);
  if (!cfg.get("out").empty()) {
    const fs::path out = output_dir(cfg);
    write_file(out / "compare.json", doc.dump(2) + "\n");
    write_file(out / "compare.txt", text);
    cfg.write(out);
  }
  return 0;
}

int cmd_search(const RunConfig& cfg) {
  const KnowledgeGraph g = load_augmented(cfg);
  const SearchConfig sc = cfg.search();
  std::optional<fs::path> ledger;
  if (!cfg.get("out").empty()) {
    ledger = output_dir(cfg);
    cfg.write(*ledger);
  }
  const SearchResult result = run_search(g, sc, ledger);
  std::printf("%-5s %-6s %10s %10s %-9s %s\n", "rank", "trial", "valid_mrr", "test_mrr",
              "uses_head", "spec");
  for (std::size_t i = 0; i < result.leaderboard.size(); ++i) {
    const auto& t = result.leaderboard[i];
    std::printf("%-5zu %-6u %10.6f %10.6f %-9s %s\n", i + 1, t.trial_index, t.valid_mrr,
                t.test_mrr, t.uses_head ? "yes" : "no", t.spec.c_str());
  }
  return 0;
}

ordered_json shares(const OccurrenceTable& table) {
  ordered_json j;
  for (const auto& [key, fraction] :
       std::vector<std::pair<const char*, double>>{{"top_0.1%", 0.001}, {"top_1%", 0.01},
                                                   {"top_5%", 0.05}, {"top_10%", 0.10}}) {
    j[key] = top_share(table, fraction);
  }
  return j;
}

int cmd_analyze(const RunConfig& cfg) {
  const KnowledgeGraph g = load_graph(require_path(cfg, "graph"));
  const fs::path out = output_dir(cfg);
  const OccurrenceTable train_occ = tail_occurrences(g, Split::kTrain);
  const OccurrenceTable test_occ = tail_occurrences(g, Split::kTest);
  write_file(out / "histogram_train.csv", histogram_csv(occurrence_histogram(train_occ)));
  write_file(out / "histogram_test.csv", histogram_csv(occurrence_histogram(test_occ)));

  ordered_json j;
  j["entity_count"] = g.entity_count();
  j["relation_count"] = g.relation_count();
  j["augmented"] = g.augmented();
  j["train_triples"] = g.train().size();
  j["test_triples"] = g.test().size();
  j["train_tail_share"] = shares(train_occ);
  j["test_tail_share"] = shares(test_occ);
  j["num_terms"] = enumerate_terms().size();
  j["num_distinct_terms"] = kNumDistinctTerms;
  j["search_space_size"] = search_space_size().str();
  j["distinct_search_space_size"] = distinct_search_space_size().str();
  write_file(out / "summary.json", j.dump(2) + "\n");
  cfg.write(out);
  std::printf("train top-1%% tail share %.4f, test %.4f\nsearch space 3^56 = %s, 3^35 = %s\n",
              top_share(train_occ, 0.01), top_share(test_occ, 0.01),
              search_space_size().str().c_str(), distinct_search_space_size().str().c_str());
  return 0;
}

std::string flag_name(std::string_view key) {
  std::string name(key);
  std::replace(name.begin(), name.end(), '_', '-');
  return "--" + name;
}

bool is_boolean_key(std::string_view key) {
  return key == "paper_scale" || key == "typed" || key == "filtered" || key == "entoccur_tiebreak";
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Knowledge graph scoring-function experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       std::string("kgbias ") + KGBIAS_VERSION + " (dataset format " +
                           std::to_string(kDatasetFormatVersion) + ", checkpoint format " +
                           std::to_string(kCheckpointVersion) + ")");

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&);
  };
  const std::vector<Command> commands{
      {"generate", "Write a synthetic dataset", cmd_generate},
      {"train", "Train a scoring function", cmd_train},
      {"eval", "Evaluate a checkpoint or baseline", cmd_eval},
      {"search", "Random search over scoring functions", cmd_search},
      {"analyze", "Tail occurrence statistics", cmd_analyze},
      {"compare-protocols", "Evaluate scorers under every protocol", cmd_compare},
  };

  std::map<std::string, std::string> flag_values;
  std::string config_path;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "key=value config file; flags override it");
    for (const auto& k : config_keys()) {
      std::string& slot = flag_values[std::string(k.name)];
      CLI::Option* opt =
          is_boolean_key(k.name)
              ? sub->add_flag(flag_name(k.name) + "{true}", slot, std::string(k.help))
              : sub->add_option(flag_name(k.name), slot, std::string(k.help));
      if (!is_boolean_key(k.name)) opt->default_str(std::string(k.default_value));
    }
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (const auto& [sub, command] : subs) {
    if (!sub->parsed()) continue;
    std::map<std::string, std::string> given;
    for (const auto& k : config_keys()) {
      if (sub->get_option(flag_name(k.name))->count() > 0) {
        given[std::string(k.name)] = flag_values[std::string(k.name)];
      }
    }
    const auto file = config_path.empty() ? std::map<std::string, std::string>{}
                                          : read_config_file(config_path);
    return command->fn(RunConfig::resolve(file, given));
  }
  return 1;
}

}  // namespace kgbias::cli

int main(int argc, char** argv) {
  using namespace kgbias;
  try {
    return cli::run(argc, argv);
  } catch (const ParseError& e) {
    std::cerr << "kgbias: parse error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "kgbias: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "kgbias: " << e.what() << "\n";
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "kgbias: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const BoundsError& e) {
    std::cerr << "kgbias: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "kgbias: " << e.what() << "\n";
    return 1;
  }
}
