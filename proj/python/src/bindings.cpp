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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kgbias/baseline.hpp"
#include "kgbias/error.hpp"
#include "kgbias/eval.hpp"
#include "kgbias/search.hpp"
#include "kgbias/search_space.hpp"
#include "kgbias/train.hpp"

namespace py = pybind11;
using namespace kgbias;

namespace {

py::list triples_to_list(const std::vector<Triple>& triples) {
  py::list out;
  for (const Triple& t : triples) out.append(py::make_tuple(t.head, t.relation, t.tail));
  return out;
}

std::vector<Triple> list_to_triples(const std::vector<std::tuple<EntityId, RelationId, EntityId>>& rows) {
  std::vector<Triple> out;
  out.reserve(rows.size());
  for (const auto& [h, r, t] : rows) out.push_back({h, r, t});
  return out;
}

py::dict metrics_dict(const RankingMetrics& m) {
  py::dict d;
  d["mrr"] = m.mrr;
  d["hits1"] = m.hits1;
  d["hits3"] = m.hits3;
  d["hits10"] = m.hits10;
  d["num_queries"] = m.num_queries;
  d["short_queries"] = m.short_queries;
  return d;
}

py::dict trial_dict(const TrialRecord& t) {
  py::dict d;
  d["trial_index"] = t.trial_index;
  d["spec"] = t.spec;
  d["per_candidate_seed"] = t.per_candidate_seed;
  d["valid_mrr"] = t.valid_mrr;
  d["test_mrr"] = t.test_mrr;
  d["uses_head"] = t.uses_head;
  d["train_seconds"] = t.train_seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Knowledge graph scoring functions, training and evaluation protocols";
  m.attr("__version__") = KGBIAS_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<BoundsError>(m, "BoundsError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::enum_<Split>(m, "Split")
      .value("TRAIN", Split::kTrain)
      .value("VALID", Split::kValid)
      .value("TEST", Split::kTest);

  py::class_<KnowledgeGraph>(m, "KnowledgeGraph")
      .def(py::init([](std::uint32_t entities, std::uint32_t relations,
                       const std::vector<std::tuple<EntityId, RelationId, EntityId>>& train,
                       const std::vector<std::tuple<EntityId, RelationId, EntityId>>& valid,
                       const std::vector<std::tuple<EntityId, RelationId, EntityId>>& test,
                       std::optional<std::vector<TypeId>> types) {
             return KnowledgeGraph(entities, relations, list_to_triples(train),
                                   list_to_triples(valid), list_to_triples(test), std::move(types));
           }),
           py::arg("entity_count"), py::arg("relation_count"), py::arg("train"),
           py::arg("valid") = std::vector<std::tuple<EntityId, RelationId, EntityId>>{},
           py::arg("test") = std::vector<std::tuple<EntityId, RelationId, EntityId>>{},
           py::arg("entity_types") = std::nullopt)
      .def_property_readonly("entity_count", &KnowledgeGraph::entity_count)
      .def_property_readonly("relation_count", &KnowledgeGraph::relation_count)
      .def_property_readonly("augmented", &KnowledgeGraph::augmented)
      .def_property_readonly("typed", &KnowledgeGraph::typed)
      .def_property_readonly("entity_types", &KnowledgeGraph::entity_types)
      .def("split", [](const KnowledgeGraph& g, Split s) { return triples_to_list(g.split(s)); })
      .def("__repr__", [](const KnowledgeGraph& g) {
        return "<KnowledgeGraph " + std::to_string(g.entity_count()) + " entities, " +
               std::to_string(g.relation_count()) + " relations, " +
               std::to_string(g.train().size()) + " train triples>";
      });

  m.def("load_graph", &load_graph, py::arg("directory"));
  m.def("save_graph", &save_graph, py::arg("graph"), py::arg("directory"));
  m.def("add_inverse_relations", &add_inverse_relations, py::arg("graph"));
  m.def("top_share", [](const KnowledgeGraph& g, double fraction, Split split) {
    return top_share(tail_occurrences(g, split), fraction);
  }, py::arg("graph"), py::arg("fraction"), py::arg("split") = Split::kTrain);
  m.def("occurrence_histogram", [](const KnowledgeGraph& g, Split split) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    for (const auto& bin : occurrence_histogram(tail_occurrences(g, split))) {
      out.emplace_back(bin.occurrence, bin.num_entities);
    }
    return out;
  }, py::arg("graph"), py::arg("split") = Split::kTrain);

  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("entity_count", &SyntheticConfig::entity_count)
      .def_readwrite("relation_count", &SyntheticConfig::relation_count)
      .def_readwrite("triple_count", &SyntheticConfig::triple_count)
      .def_readwrite("zipf_exponent", &SyntheticConfig::zipf_exponent)
      .def_readwrite("typed", &SyntheticConfig::typed)
      .def_readwrite("type_count", &SyntheticConfig::type_count)
      .def_readwrite("head_signal", &SyntheticConfig::head_signal)
      .def_readwrite("cluster_count", &SyntheticConfig::cluster_count)
      .def_readwrite("split_fractions", &SyntheticConfig::split_fractions)
      .def_readwrite("seed", &SyntheticConfig::seed);
  m.def("synthetic_preset", &synthetic_preset, py::arg("name"));
  m.def("generate_synthetic", &generate_synthetic, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<ScoringFunction>(m, "ScoringFunction")
      .def("__str__", &print_sf)
      .def("__repr__", [](const ScoringFunction& sf) { return "<ScoringFunction " + print_sf(sf) + ">"; })
      .def("__len__", &ScoringFunction::size)
      .def("__eq__", [](const ScoringFunction& a, const ScoringFunction& b) { return a == b; })
      .def_property_readonly("uses_head", [](const ScoringFunction& sf) { return uses_head(sf); });
  m.def("parse_sf", [](const std::string& text) { return parse_sf(text); }, py::arg("text"));
  m.def("resolve_sf", [](const std::string& text) { return resolve_sf(text); }, py::arg("name_or_text"));
  m.def("catalog", [](const std::string& name) { return catalog(name); }, py::arg("name"));
  m.def("catalog_names", &catalog_names);
  m.def("num_terms", [] { return enumerate_terms().size(); });
  m.def("search_space_size", [] { return py::int_(py::str(search_space_size().str())); });
  m.def("distinct_search_space_size",
        [] { return py::int_(py::str(distinct_search_space_size().str())); });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("dim", &TrainConfig::dim)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("negatives", &TrainConfig::negatives)
      .def_readwrite("margin", &TrainConfig::margin)
      .def_readwrite("dropout", &TrainConfig::dropout)
      .def_readwrite("max_steps", &TrainConfig::max_steps)
      .def_readwrite("valid_interval", &TrainConfig::valid_interval)
      .def_readwrite("valid_negatives", &TrainConfig::valid_negatives)
      .def_readwrite("adversarial_temperature", &TrainConfig::adversarial_temperature)
      .def_property("self_adversarial",
                    [](const TrainConfig& c) { return c.weighting == NegativeWeighting::kSelfAdversarial; },
                    [](TrainConfig& c, bool on) {
                      c.weighting = on ? NegativeWeighting::kSelfAdversarial : NegativeWeighting::kUniform;
                    })
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<EvalProtocol>(m, "EvalProtocol")
      .def_static("parse", &EvalProtocol::parse, py::arg("label"), py::arg("seed") = 0)
      .def_static("sampled", &EvalProtocol::sampled, py::arg("n") = 500, py::arg("seed") = 0)
      .def_static("typed", &EvalProtocol::typed, py::arg("n") = 500, py::arg("seed") = 0)
      .def_static("full", &EvalProtocol::full)
      .def_readwrite("filtered", &EvalProtocol::filtered)
      .def_readwrite("seed", &EvalProtocol::seed)
      .def_property_readonly("label", &EvalProtocol::label)
      .def("__repr__", [](const EvalProtocol& p) { return "<EvalProtocol " + p.label() + ">"; });

  py::class_<Scorer>(m, "Scorer")
      .def_property_readonly("name", &Scorer::name)
      .def("score_tails", [](const Scorer& s, EntityId head, RelationId relation,
                             const std::vector<EntityId>& tails) {
        std::vector<double> out(tails.size());
        s.score_tails(head, relation, tails, out);
        return out;
      }, py::arg("head"), py::arg("relation"), py::arg("tails"));
  py::class_<EntOccurModel, Scorer>(m, "EntOccurModel")
      .def("score", &EntOccurModel::score, py::arg("head"), py::arg("relation"), py::arg("tail"));
  py::class_<EmbeddingScorer, Scorer>(m, "EmbeddingScorer")
      .def_property_readonly("dim", [](const EmbeddingScorer& s) { return s.store().dim(); })
      .def("save", [](const EmbeddingScorer& s, const std::filesystem::path& path, std::uint64_t seed) {
        save_checkpoint(path, s.store(), parse_sf(s.name()), seed);
      }, py::arg("path"), py::arg("seed") = 0);

  m.def("fit_entoccur", [](const KnowledgeGraph& g) { return fit_entoccur(g); }, py::arg("graph"));
  m.def("load_checkpoint", [](const std::filesystem::path& path) {
    Checkpoint ck = load_checkpoint(path);
    return EmbeddingScorer(std::move(ck.store), parse_sf(ck.spec));
  }, py::arg("path"));

  m.def("train", [](const KnowledgeGraph& g, const ScoringFunction& sf, const TrainConfig& cfg) {
    TrainResult result = [&] {
      py::gil_scoped_release release;
      return train(g, sf, cfg);
    }();
    py::list curve;
    for (const auto& p : result.report.curve) curve.append(py::make_tuple(p.step, p.valid_mrr));
    py::dict report;
    report["curve"] = curve;
    report["best_step"] = result.report.best_step;
    report["best_valid_mrr"] = result.report.best_valid_mrr;
    report["seconds"] = result.report.seconds;
    return py::make_tuple(EmbeddingScorer(std::move(result.store), sf), report);
  }, py::arg("graph"), py::arg("sf"), py::arg("config") = TrainConfig{});

  m.def("evaluate", [](const Scorer& s, const KnowledgeGraph& g, Split split, const EvalProtocol& p) {
    RankingMetrics metrics;
    {
      py::gil_scoped_release release;
      metrics = evaluate(s, g, split, p);
    }
    return metrics_dict(metrics);
  }, py::arg("scorer"), py::arg("graph"), py::arg("split") = Split::kTest,
     py::arg("protocol") = EvalProtocol::sampled(500));

  py::class_<SearchConfig>(m, "SearchConfig")
      .def(py::init<>())
      .def_readwrite("budget", &SearchConfig::budget)
      .def_readwrite("num_terms", &SearchConfig::num_terms)
      .def_readwrite("train", &SearchConfig::train)
      .def_readwrite("protocol", &SearchConfig::protocol)
      .def_readwrite("seed", &SearchConfig::seed)
      .def_readwrite("jobs", &SearchConfig::jobs);
  m.def("run_search", [](const KnowledgeGraph& g, const SearchConfig& cfg,
                         std::optional<std::filesystem::path> ledger) {
    SearchResult result;
    {
      py::gil_scoped_release release;
      result = run_search(g, cfg, ledger);
    }
    py::list board;
    for (const auto& t : result.leaderboard) board.append(trial_dict(t));
    return board;
  }, py::arg("graph"), py::arg("config"), py::arg("ledger_dir") = std::nullopt);
}
