#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "stacktag/bpe.hpp"
#include "stacktag/cli.hpp"
#include "stacktag/corpus.hpp"
#include "stacktag/crf.hpp"
#include "stacktag/evaluate.hpp"
#include "stacktag/pipeline.hpp"
#include "stacktag/sentence_split.hpp"

namespace py = pybind11;
using namespace stacktag;

namespace {

py::dict scores_dict(const Scores& s) {
  py::dict d;
  d["tp"] = s.tp;
  d["fp"] = s.fp;
  d["fn"] = s.fn;
  d["precision"] = s.precision;
  d["recall"] = s.recall;
  d["f1"] = s.f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_stacktag, m) {
  m.attr("__version__") = STACKTAG_VERSION;

  // Message is "Kind: text", e.g. "MalformedAnnotation: line 3 ...".
  static const py::handle error =
      py::exception<Error>(m, "StacktagError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<Token>(m, "Token")
      .def(py::init<std::string, std::size_t, std::size_t>(), py::arg("surface"), py::arg("start"),
           py::arg("end"))
      .def_readwrite("surface", &Token::surface)
      .def_readwrite("start", &Token::start)
      .def_readwrite("end", &Token::end)
      .def("__eq__", [](const Token& a, const Token& b) { return a == b; })
      .def("__repr__", [](const Token& t) {
        return "Token(" + t.surface + ", " + std::to_string(t.start) + ", " + std::to_string(t.end) + ")";
      });

  py::class_<TaggedSentence>(m, "TaggedSentence")
      .def(py::init<>())
      .def_readwrite("tokens", &TaggedSentence::tokens)
      .def_readwrite("tags", &TaggedSentence::tags);

  py::class_<EntityAnnotation>(m, "EntityAnnotation")
      .def_readonly("ann_id", &EntityAnnotation::ann_id)
      .def_readonly("label", &EntityAnnotation::label)
      .def_readonly("start", &EntityAnnotation::start)
      .def_readonly("end", &EntityAnnotation::end)
      .def_readonly("surface", &EntityAnnotation::surface);

  py::class_<EntityMention>(m, "EntityMention")
      .def(py::init<std::string, std::size_t, std::size_t, std::string>(), py::arg("doc_id"),
           py::arg("start"), py::arg("end"), py::arg("label"))
      .def_readwrite("doc_id", &EntityMention::doc_id)
      .def_readwrite("start", &EntityMention::start)
      .def_readwrite("end", &EntityMention::end)
      .def_readwrite("label", &EntityMention::label)
      .def("__eq__", [](const EntityMention& a, const EntityMention& b) { return a == b; })
      .def("__repr__", [](const EntityMention& x) {
        return "EntityMention(" + x.doc_id + ", " + std::to_string(x.start) + ", " +
               std::to_string(x.end) + ", " + x.label + ")";
      });

  // corpus
  m.def("tokenize", [](const std::string& text) { return tokenize(text); });
  m.def("split_sentences_rule", [](const std::string& text) { return split_sentences_rule(text); });
  m.def(
      "to_bio",
      [](const std::string& text, const std::string& ann) {
        const auto doc = parse_brat(text, ann);
        Warnings w;
        return align_bio(doc, tokenize_spans(text, split_sentences_rule(text)), &w);
      },
      py::arg("text"), py::arg("ann"), "brat document to BIO sentences (rule-based splitting)");
  m.def("parse_entities", [](const std::string& text, const std::string& ann) {
    return parse_brat(text, ann).entities;
  });
  m.def("repair_bio", &repair_bio);
  m.def("is_valid_bio", &is_valid_bio);
  m.def("decode_bio", &decode_bio);
  m.def("write_conll", &write_conll);
  m.def("read_conll", [](const std::string& s) { return read_conll(s); });
  m.def("write_brat", [](const std::vector<EntityMention>& ms, const std::string& text) {
    return write_brat(ms, text);
  });

  // crf
  m.def("crf_log_partition", &crf::log_partition, py::arg("emissions"), py::arg("transitions"));
  m.def(
      "crf_viterbi",
      [](const Matrix& em, const Matrix& trans) {
        const auto r = crf::viterbi(em, trans);
        return py::make_tuple(r.tags, r.score);
      },
      py::arg("emissions"), py::arg("transitions"));
  m.def("crf_nll", &crf::nll, py::arg("emissions"), py::arg("transitions"), py::arg("gold"));
  m.def("crf_init_transitions", [](int num_tags) { return crf::init_transitions(num_tags); });

  // bpe
  m.def(
      "bpe_learn",
      [](const std::map<std::string, std::size_t>& freq, std::size_t target) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [a, b] : bpe::learn(freq, target).merges) out.emplace_back(a, b);
        return out;
      },
      py::arg("word_freq"), py::arg("target"));
  m.def(
      "bpe_segment",
      [](const std::vector<std::pair<std::string, std::string>>& merges, const std::string& word) {
        bpe::MergeTable t;
        for (const auto& [a, b] : merges) t.merges.push_back({a, b});
        return bpe::Segmenter(t).segment(word);
      },
      py::arg("merges"), py::arg("word"));

  // evaluation
  m.def(
      "evaluate",
      [](const std::vector<EntityMention>& gold, const std::vector<EntityMention>& pred,
         bool overlap) {
        const auto r = evaluate(gold, pred, overlap ? MatchMode::Overlap : MatchMode::Strict);
        py::dict labels;
        for (const auto& [k, v] : r.per_label) labels[py::str(k)] = scores_dict(v);
        py::dict d = scores_dict(r.micro);
        d["per_label"] = labels;
        return d;
      },
      py::arg("gold"), py::arg("pred"), py::arg("overlap") = false);
  m.def("read_ann_mentions", [](const std::string& content, const std::string& doc_id) {
    return read_ann_mentions(content, doc_id);
  });
  m.def("format_percent", &format_percent);

  // tagging
  py::class_<ModelBundle, std::unique_ptr<ModelBundle>>(m, "Model")
      .def_static(
          "load",
          [](const std::string& path) {
            return std::make_unique<ModelBundle>(ModelBundle::load(path));
          },
          py::arg("path"))
      .def_property_readonly("labels", [](const ModelBundle& b) { return b.tagger.labels(); })
      .def_property_readonly("stack", [](const ModelBundle& b) { return b.stack.kinds(); })
      .def(
          "tag",
          [](ModelBundle& b, const std::string& text) {
            auto r = tag_text(text, b);
            return py::make_tuple(r.mentions, r.ann);
          },
          py::arg("text"), "(mentions, brat .ann text) for raw text");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one command-line invocation; returns (exit code, stdout, stderr).");
}
