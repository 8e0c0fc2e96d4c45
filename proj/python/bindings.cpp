#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "perception/baselines.hpp"
#include "perception/checkpoint.hpp"
#include "perception/commands.hpp"
#include "perception/config.hpp"
#include "perception/corpus.hpp"
#include "perception/error.hpp"
#include "perception/featurizer.hpp"
#include "perception/perception.hpp"
#include "perception/report.hpp"
#include "perception/rng.hpp"
#include "perception/uncertainty.hpp"

namespace py = pybind11;
using namespace perception;

namespace {

py::dict sample_dict(const Sample &s) {
    py::dict d;
    d["id"] = s.id;
    d["context"] = s.context;
    d["reference"] = s.reference;
    d["generation"] = s.generation;
    return d;
}

py::list corpus_list(const Corpus &c) {
    py::list out;
    for (const auto &s : c.samples) out.append(sample_dict(s));
    return out;
}

Corpus corpus_from(const py::iterable &samples, const std::string &kind) {
    Corpus c;
    c.kind = parse_corpus_kind(kind);
    for (const auto &item : samples) {
        auto d = item.cast<py::dict>();
        Sample s;
        s.id = d["id"].cast<std::string>();
        s.context = d.contains("context") ? d["context"].cast<std::string>() : std::string();
        s.reference = d["reference"].cast<std::string>();
        s.generation = d["generation"].cast<std::string>();
        c.samples.push_back(std::move(s));
    }
    validate(c);
    return c;
}

py::object to_py(const nlohmann::ordered_json &j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Perception Score core";

    static py::exception<Error> base(m, "PerceptionError");
    static py::exception<InputError> input(m, "InputError", base.ptr());
    static py::exception<CompatibilityError> compat(m, "CompatibilityError", base.ptr());
    static py::exception<NumericError> numeric(m, "NumericError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InputError &e) {
            py::set_error(input, e.what());
        } catch (const CompatibilityError &e) {
            py::set_error(compat, e.what());
        } catch (const NumericError &e) {
            py::set_error(numeric, e.what());
        } catch (const Error &e) {
            py::set_error(base, e.what());
        }
    });

    m.def("pair_softmax", [](double raw_gen, double raw_ref) {
        auto p = pair_softmax(raw_gen, raw_ref);
        return py::make_tuple(p.p_generated, p.p_reference);
    }, py::arg("raw_gen"), py::arg("raw_ref"), "(p_generated, p_reference)");
    m.def("sigmoid", &sigmoid);
    m.def("adjusted_probability", &adjusted_probability, py::arg("p_reference"), py::arg("c"));
    m.def("loss_task", [](const std::vector<double> &p) { return loss_task(p); });
    m.def("loss_confidence", [](const std::vector<double> &c) { return loss_confidence(c); });
    m.def("combine_losses", [](double lt, double lc, double gp, double lambda, double beta) {
        return to_py(loss_json(combine_losses(lt, lc, gp, lambda, beta)));
    }, py::arg("l_task"), py::arg("l_conf"), py::arg("gp"), py::arg("lambda_"), py::arg("beta"));

    m.def("sample_weights", [](const std::vector<double> &c, const std::vector<double> &mm, const std::string &mode) {
        return sample_weights(c, mm, parse_weight_mode(mode));
    }, py::arg("c"), py::arg("m"), py::arg("mode") = "literal");
    m.def("system_score", [](const std::vector<double> &p, const std::vector<double> &c, const std::vector<double> &mm,
                             const std::string &mode) {
        if (p.size() != c.size() || p.size() != mm.size()) throw ValidationError("p, c and m must have equal length");
        std::vector<PartialRecord> recs;
        for (std::size_t i = 0; i < p.size(); ++i) recs.push_back({p[i], c[i], mm[i]});
        return system_score(recs, parse_weight_mode(mode)).p_sys;
    }, py::arg("p_generated"), py::arg("c"), py::arg("m"), py::arg("mode") = "literal");

    m.def("bleu", [](const std::string &cand, const std::vector<std::string> &refs, std::size_t max_n, bool smooth,
                     bool case_fold) {
        return bleu(cand, refs, {max_n, smooth ? BleuSmoothing::add_one : BleuSmoothing::none, case_fold});
    }, py::arg("candidate"), py::arg("references"), py::arg("max_n") = 4, py::arg("smooth") = true,
          py::arg("case_fold") = false);
    m.def("pearson", [](const std::vector<double> &x, const std::vector<double> &y) { return pearson(x, y); });
    m.def("spearman", [](const std::vector<double> &x, const std::vector<double> &y) { return spearman(x, y); });

    m.def("featurize_pair", [](const std::string &context, const std::string &candidate, std::size_t dim,
                               std::uint64_t hash_seed) {
        FeatureConfig f;
        f.dim_per_segment = dim;
        f.hash_seed = hash_seed;
        validate(f);
        return featurize_pair(context, candidate, f);
    }, py::arg("context"), py::arg("candidate"), py::arg("dim_per_segment") = 512, py::arg("hash_seed") = 0);

    m.def("make_synthetic", [](const std::string &grammar, std::size_t n, std::uint64_t seed, const std::string &kind,
                               const std::string &corruption, double level) {
        return corpus_list(make_synthetic({parse_grammar(grammar), n, seed, parse_corpus_kind(kind),
                                           parse_perturbation_kind(corruption), level}));
    }, py::arg("grammar"), py::arg("n"), py::arg("seed"), py::arg("kind") = "conditional",
          py::arg("corruption") = "word_substitute", py::arg("level") = 0.4);
    m.def("perturb", [](const std::string &text, const std::string &kind, double level, std::uint64_t seed) {
        return perturb(text, {parse_perturbation_kind(kind), level, seed});
    }, py::arg("text"), py::arg("kind"), py::arg("level"), py::arg("seed"));
    m.def("load_jsonl", [](const std::filesystem::path &path, const std::string &kind) {
        return corpus_list(load_jsonl(path, parse_corpus_kind(kind)));
    }, py::arg("path"), py::arg("kind") = "conditional");

    py::class_<RunConfig>(m, "Config")
        .def(py::init<>())
        .def_static("load", &load_config)
        .def("set", [](RunConfig &c, const std::string &key, const std::string &value) { apply_setting(c, key, value); })
        .def("validate", [](const RunConfig &c) { validate(c); })
        .def("to_dict", [](const RunConfig &c) { return to_py(to_json(c)); })
        .def("to_toml", &to_toml);

    py::class_<TrainedModel>(m, "Model")
        .def_property_readonly("best_epoch", [](const TrainedModel &t) { return t.log.best_epoch; })
        .def_property_readonly("seed", [](const TrainedModel &t) { return t.seed; })
        .def("save", [](const TrainedModel &t, const std::filesystem::path &path, const RunConfig &config) {
            save_checkpoint(path, t, to_json(config));
        })
        .def_static("load", [](const std::filesystem::path &path) { return load_checkpoint(path); });

    m.def("train", [](const RunConfig &config, const py::iterable &train_set, const py::iterable &dev_set) {
        validate(config);
        auto tr = corpus_from(train_set, std::string(to_string(config.data.kind)));
        auto dv = corpus_from(dev_set, std::string(to_string(config.data.kind)));
        py::gil_scoped_release nogil;
        return train(tr, dv, config.features, config.hyper, config.seed);
    }, py::arg("config"), py::arg("train_set"), py::arg("dev_set"));

    m.def("score", [](const RunConfig &config, const TrainedModel &model, const py::iterable &test_set) {
        validate(config);
        check_compatible(model, config.features);
        auto te = corpus_from(test_set, std::string(to_string(config.data.kind)));
        SystemReport report;
        {
            py::gil_scoped_release nogil;
            report = evaluate_system(model, te, config.eval_options(), derive_seed(config.seed, "score"));
        }
        return to_py(system_report_json(report, to_json(config)));
    }, py::arg("config"), py::arg("model"), py::arg("test_set"));

    m.def("bench", [](const RunConfig &config) {
        BenchReport report;
        {
            py::gil_scoped_release nogil;
            report = run_bench(config);
        }
        return to_py(bench_json(report, to_json(config)));
    }, py::arg("config"));
}
