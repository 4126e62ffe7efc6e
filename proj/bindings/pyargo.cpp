#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "argo/checkpoint.hpp"
#include "argo/data.hpp"
#include "argo/eval.hpp"
#include "argo/synth.hpp"
#include "argo/training.hpp"

namespace py = pybind11;
using namespace argo;

namespace {

HyperParams hp_from_kwargs(int d, int M, double w, std::vector<double> lambda, double lr,
                           int batch_size, double dropout, int epochs, std::uint64_t seed,
                           std::vector<int> cutoffs) {
  HyperParams hp;
  hp.d = d;
  hp.M = M;
  hp.w = w;
  hp.lambda = std::move(lambda);
  hp.lr = lr;
  hp.batch_size = batch_size;
  hp.dropout = dropout;
  hp.epochs = epochs;
  hp.seed = seed;
  hp.cutoffs = std::move(cutoffs);
  hp.normalize_lambda();
  hp.validate();
  return hp;
}

}  // namespace

PYBIND11_MODULE(pyargo, m) {
  m.doc() = "Multi-behavior recommender: identity matching + chain prediction";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericError>(m, "NumericError");

  py::class_<InteractionDataset>(m, "InteractionDataset")
      .def_readonly("num_users", &InteractionDataset::num_users)
      .def_readonly("num_items", &InteractionDataset::num_items)
      .def_readonly("num_levels", &InteractionDataset::num_levels)
      .def("has", &InteractionDataset::has, py::arg("level"), py::arg("user"), py::arg("item"))
      .def("level_count", &InteractionDataset::level_count)
      .def("positives", [](const InteractionDataset& ds, int level, int user) {
        return ds.positives.at(level).at(user);
      });

  py::class_<HyperParams>(m, "HyperParams")
      .def(py::init(&hp_from_kwargs), py::kw_only(), py::arg("d") = 64, py::arg("M") = 4,
           py::arg("w") = 0.01, py::arg("lam") = std::vector<double>{1.0 / 6, 4.0 / 6, 1.0 / 6},
           py::arg("lr") = 0.05, py::arg("batch_size") = 256, py::arg("dropout") = 0.5,
           py::arg("epochs") = 100, py::arg("seed") = 1,
           py::arg("cutoffs") = std::vector<int>{10, 50, 100, 200})
      .def_readwrite("d", &HyperParams::d)
      .def_readwrite("M", &HyperParams::M)
      .def_readwrite("w", &HyperParams::w)
      .def_readwrite("lam", &HyperParams::lambda)
      .def_readwrite("lr", &HyperParams::lr)
      .def_readwrite("batch_size", &HyperParams::batch_size)
      .def_readwrite("dropout", &HyperParams::dropout)
      .def_readwrite("epochs", &HyperParams::epochs)
      .def_readwrite("seed", &HyperParams::seed)
      .def_readwrite("cutoffs", &HyperParams::cutoffs);

  py::enum_<Variant>(m, "Variant")
      .value("FULL", Variant::full)
      .value("SINGLE_IDENTITY", Variant::single_identity)
      .value("INDEPENDENT_HEADS", Variant::independent_heads);

  py::class_<ModelParams>(m, "ModelParams")
      .def_readonly("num_users", &ModelParams::num_users)
      .def_readonly("num_items", &ModelParams::num_items)
      .def_readonly("num_levels", &ModelParams::num_levels)
      .def_readonly("embed_dim", &ModelParams::embed_dim)
      .def_readonly("num_identities", &ModelParams::num_identities)
      .def_readonly("P", &ModelParams::P)
      .def_readonly("Q", &ModelParams::Q)
      .def_readonly("h", &ModelParams::h)
      .def_readonly("T", &ModelParams::T);

  py::class_<SplitDataset>(m, "SplitDataset")
      .def_readonly("train", &SplitDataset::train)
      .def_readonly("test_items", &SplitDataset::test_items)
      .def_readonly("valid_items", &SplitDataset::valid_items);

  py::class_<LossBreakdown>(m, "LossBreakdown")
      .def_readonly("regression", &LossBreakdown::regression)
      .def_readonly("divergence", &LossBreakdown::divergence)
      .def_readonly("total", &LossBreakdown::total);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("loss", &EpochRecord::loss)
      .def_readonly("val_hr10", &EpochRecord::val_hr10);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("final_params", &TrainResult::final_params)
      .def_readonly("history", &TrainResult::history)
      .def_readonly("best_epoch", &TrainResult::best_epoch);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("cutoffs", &EvalReport::cutoffs)
      .def_readonly("hr", &EvalReport::hr)
      .def_readonly("ndcg", &EvalReport::ndcg)
      .def_readonly("num_users", &EvalReport::num_users);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("num_users", &SynthConfig::num_users)
      .def_readwrite("num_items", &SynthConfig::num_items)
      .def_readwrite("latent_dim", &SynthConfig::latent_dim)
      .def_readwrite("num_tastes", &SynthConfig::num_tastes)
      .def_readwrite("num_levels", &SynthConfig::num_levels)
      .def_readwrite("link_scale", &SynthConfig::link_scale)
      .def_readwrite("link_offset", &SynthConfig::link_offset)
      .def_readwrite("base_rate", &SynthConfig::base_rate)
      .def_readwrite("noise", &SynthConfig::noise)
      .def_readwrite("transition_lo", &SynthConfig::transition_lo)
      .def_readwrite("transition_hi", &SynthConfig::transition_hi)
      .def_readwrite("seed", &SynthConfig::seed);

  m.def("load_interactions",
        [](const std::string& path, int levels) { return load_interactions(path, levels).dataset; },
        py::arg("path"), py::arg("expected_levels") = 0);
  m.def("generate", [](const SynthConfig& cfg) { return generate(cfg).dataset; }, py::arg("cfg"));
  m.def("leave_one_out_split",
        [](const InteractionDataset& ds, std::uint64_t seed) {
          Rng rng(seed);
          return leave_one_out_split(ds, rng);
        },
        py::arg("dataset"), py::arg("seed"));
  m.def("train",
        [](const SplitDataset& split, const HyperParams& hp, Variant variant) {
          Rng rng(hp.seed);
          return train(split, hp, rng, variant);
        },
        py::arg("split"), py::arg("hp"), py::arg("variant") = Variant::full,
        py::call_guard<py::gil_scoped_release>());
  m.def("evaluate",
        [](const ModelParams& params, const SplitDataset& split, const std::vector<int>& cutoffs) {
          return evaluate(params, split, cutoffs);
        },
        py::arg("params"), py::arg("split"), py::arg("cutoffs") = std::vector<int>{10, 50, 100, 200});
  m.def("score_all_items", &score_all_items, py::arg("params"), py::arg("user"));
  m.def("gradient_check",
        [](const SplitDataset& split, const HyperParams& hp, Variant variant) {
          Rng rng(hp.seed);
          const ModelParams params = init_params(hp, split.train, rng, variant);
          std::vector<int> batch(split.train.num_users);
          for (int u = 0; u < split.train.num_users; ++u) batch[u] = u;
          const auto report = finite_difference_check(params, batch, split.train, hp);
          return py::make_tuple(report.pass, report.to_string());
        },
        py::arg("split"), py::arg("hp"), py::arg("variant") = Variant::full);
  m.def("estimate_transitions", [](const InteractionDataset& ds) {
    const auto emp = estimate_transitions(ds);
    return py::make_tuple(emp.p_hat, emp.support);
  });
}
