#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "eegcn/app.hpp"
#include "eegcn/model.hpp"
#include "eegcn/train.hpp"

namespace py = pybind11;
using namespace eegcn;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::array_t<double> to_array(const graph::AdjacencyMatrix& a) {
  py::array_t<double> out({a.n, a.n});
  std::copy(a.values.begin(), a.values.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(const ad::Tensor& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

std::vector<std::size_t> labels_of(const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    auto s = corpus::parse_sentiment(n);
    if (!s) throw std::invalid_argument("unknown label '" + n + "'");
    out.push_back(static_cast<std::size_t>(*s));
  }
  return out;
}

py::dict epoch_to_dict(const train::EpochLog& e) {
  py::dict d;
  d["epoch"] = e.epoch;
  d["train_loss"] = e.train_loss;
  d["train_accuracy"] = e.train_accuracy;
  d["test_accuracy"] = e.test_accuracy;
  d["test_macro_f1"] = e.test_macro_f1;
  return d;
}

app::RunConfig make_config(const std::optional<std::filesystem::path>& config_file,
                           const std::map<std::string, std::string>& overrides) {
  app::RunConfig c;
  if (config_file) c.load_file(*config_file);
  for (const auto& [k, v] : overrides) c.set(k, v);
  c.model.validate();
  c.train.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_eegcn, m) {
  m.doc() = "Aspect-level sentiment classification with syntax-weighted graph convolution";

  py::register_exception<corpus::DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<model::VersionError>(m, "VersionError", PyExc_RuntimeError);
  py::register_exception<train::NonFiniteLossError>(m, "NonFiniteLossError", PyExc_ArithmeticError);

  py::class_<corpus::DependencyGraph>(m, "DependencyGraph")
      .def_readonly("n", &corpus::DependencyGraph::n)
      .def_readonly("roots", &corpus::DependencyGraph::roots)
      .def_readonly("forms", &corpus::DependencyGraph::forms)
      .def_property_readonly("edges",
                             [](const corpus::DependencyGraph& g) {
                               std::vector<std::tuple<std::size_t, std::size_t, std::string>> out;
                               for (const auto& e : g.edges) out.emplace_back(e.head, e.dependent, e.relation);
                               return out;
                             })
      .def("__repr__", [](const corpus::DependencyGraph& g) {
        return "<DependencyGraph n=" + std::to_string(g.n) + " edges=" + std::to_string(g.edges.size()) + ">";
      });

  py::class_<corpus::Example>(m, "Example")
      .def_readonly("tokens", &corpus::Example::tokens)
      .def_readonly("aspect_start", &corpus::Example::aspect_start)
      .def_readonly("aspect_len", &corpus::Example::aspect_len)
      .def_readonly("parse", &corpus::Example::parse)
      .def_property_readonly("label", [](const corpus::Example& e) { return std::string(corpus::to_string(e.label)); })
      .def_property_readonly("aspect", [](const corpus::Example& e) {
        std::vector<std::string> out(e.tokens.begin() + static_cast<std::ptrdiff_t>(e.aspect_start - 1),
                                     e.tokens.begin() + static_cast<std::ptrdiff_t>(e.aspect_start - 1 + e.aspect_len));
        return out;
      });

  m.def("load_examples", &corpus::load_examples, py::arg("path"));
  m.def(
      "label_counts",
      [](const std::vector<corpus::Example>& ex) {
        auto c = corpus::label_counts(ex);
        py::dict d;
        d["negative"] = c[0];
        d["neutral"] = c[1];
        d["positive"] = c[2];
        return d;
      },
      py::arg("examples"));
  m.def("parse_conllu", &corpus::parse_conllu, py::arg("path"));
  m.def(
      "parse_conllu_text", [](const std::string& text) { return corpus::parse_conllu_text(text); }, py::arg("text"));

  py::class_<graph::SdiTable>(m, "SdiTable")
      .def_property_readonly("total", &graph::SdiTable::total)
      .def_property_readonly("counts",
                             [](const graph::SdiTable& t) {
                               std::map<std::string, std::uint64_t> out(t.counts().begin(), t.counts().end());
                               return out;
                             })
      .def("sdi", &graph::SdiTable::sdi, py::arg("relation"))
      .def("__contains__", &graph::SdiTable::contains);
  m.def(
      "compute_sdi_table", [](const std::vector<corpus::DependencyGraph>& g) { return graph::compute_sdi_table(g); },
      py::arg("graphs"));
  m.def(
      "binary_adjacency", [](const corpus::DependencyGraph& g) { return to_array(graph::binary_adjacency(g)); },
      py::arg("graph"));
  m.def(
      "sdi_adjacency",
      [](const corpus::DependencyGraph& g, const graph::SdiTable& t) { return to_array(graph::sdi_adjacency(g, t)); },
      py::arg("graph"), py::arg("table"));

  m.def(
      "positional_encoding", [](std::size_t n, std::size_t d) { return to_array(model::positional_encoding(n, d)); },
      py::arg("n"), py::arg("d_model"));

  m.def(
      "accuracy",
      [](const std::vector<std::string>& p, const std::vector<std::string>& g) {
        return train::accuracy(labels_of(p), labels_of(g));
      },
      py::arg("preds"), py::arg("golds"));
  m.def(
      "macro_f1",
      [](const std::vector<std::string>& p, const std::vector<std::string>& g) {
        return train::macro_f1(labels_of(p), labels_of(g));
      },
      py::arg("preds"), py::arg("golds"));

  m.def(
      "default_config", [] { return to_python(app::RunConfig{}.to_json()); }, "Default run configuration as a dict.");

  m.def(
      "train",
      [](const std::filesystem::path& train, const std::filesystem::path& test,
         const std::filesystem::path& parses_train, const std::filesystem::path& parses_test,
         const std::filesystem::path& glove, const std::optional<std::filesystem::path>& config,
         const std::map<std::string, std::string>& overrides, const std::optional<std::filesystem::path>& checkpoint,
         const std::optional<std::function<void(py::dict)>>& on_epoch) {
        const auto cfg = make_config(config, overrides);
        const auto data = app::load_dataset({train, test, parses_train, parses_test, glove}, cfg);
        train::EpochCallback cb;
        if (on_epoch) cb = [&](const train::EpochLog& e) { (*on_epoch)(epoch_to_dict(e)); };
        auto outcome = train::run_experiment(data, cfg.model, cfg.train, cb);
        if (checkpoint) {
          model::save_checkpoint(*checkpoint, {outcome.model_config, data.vocab, data.sdi, outcome.result.best_params});
        }
        py::dict out;
        py::list log;
        for (const auto& e : outcome.result.log) log.append(epoch_to_dict(e));
        out["log"] = log;
        out["best_epoch"] = outcome.result.best_epoch;
        out["report"] = to_python(outcome.result.best_report.to_json());
        return out;
      },
      py::arg("train"), py::arg("test"), py::arg("parses_train"), py::arg("parses_test"), py::arg("glove"),
      py::arg("config") = py::none(), py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("checkpoint") = py::none(), py::arg("on_epoch") = py::none(),
      "Train a model and return the epoch log and the best-epoch test report.");

  m.def(
      "evaluate",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& test,
         const std::filesystem::path& parses_test) {
        auto ckpt = model::load_checkpoint(checkpoint);
        auto examples = corpus::load_examples(test);
        corpus::attach_parses(examples, corpus::parse_conllu(parses_test), parses_test.string());
        const auto prepared = model::prepare_all(examples, ckpt.vocab, ckpt.sdi, ckpt.config);
        return to_python(train::evaluate(prepared, ckpt.params, ckpt.config).to_json());
      },
      py::arg("checkpoint"), py::arg("test"), py::arg("parses_test"));

  m.def(
      "predict_proba",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& test,
         const std::filesystem::path& parses_test) {
        auto ckpt = model::load_checkpoint(checkpoint);
        auto examples = corpus::load_examples(test);
        corpus::attach_parses(examples, corpus::parse_conllu(parses_test), parses_test.string());
        const auto prepared = model::prepare_all(examples, ckpt.vocab, ckpt.sdi, ckpt.config);
        py::array_t<double> out({prepared.size(), corpus::kNumClasses});
        auto view = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < prepared.size(); ++i) {
          const auto p = model::forward_pass(prepared[i], ckpt.params, ckpt.config);
          for (std::size_t c = 0; c < corpus::kNumClasses; ++c) view(i, c) = p[c];
        }
        return out;
      },
      py::arg("checkpoint"), py::arg("test"), py::arg("parses_test"),
      "Class probabilities, columns ordered negative, neutral, positive.");
}
