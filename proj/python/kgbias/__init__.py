# Copyright 2026 The kgbias Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Knowledge graph scoring functions, training and evaluation protocols."""

from kgbias._core import (
    BoundsError,
    ConfigError,
    EmbeddingScorer,
    EntOccurModel,
    Error,
    EvalProtocol,
    IoError,
    KnowledgeGraph,
    ParseError,
    Scorer,
    ScoringFunction,
    SearchConfig,
    Split,
    SyntheticConfig,
    TrainConfig,
    __version__,
    add_inverse_relations,
    catalog,
    catalog_names,
    distinct_search_space_size,
    evaluate,
    fit_entoccur,
    generate_synthetic,
    load_checkpoint,
    load_graph,
    num_terms,
    occurrence_histogram,
    parse_sf,
    resolve_sf,
    run_search,
    save_graph,
    search_space_size,
    synthetic_preset,
    top_share,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
