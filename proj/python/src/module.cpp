#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "figsynth/assets.hpp"
#include "figsynth/errors.hpp"
#include "figsynth/pipeline.hpp"
#include "figsynth/qa.hpp"
#include "figsynth/render.hpp"
#include "figsynth/synthetic.hpp"

namespace py = pybind11;
using namespace figsynth;
using nlohmann::json;

namespace {

ChartType type_arg(const std::string& name) {
  const auto t = chart_type_from_name(name);
  if (!t) throw ConfigError("unknown chart type '" + name + "'");
  return *t;
}

ChartData data_arg(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseFailure("chart data is not valid JSON");
  return chart_data_from_json(j);
}

AppearanceSpec appearance_arg(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseFailure("appearance is not valid JSON");
  return appearance_from_json(j);
}

PipelineConfig config_arg(const std::string& text) {
  const json j = json::parse(text, nullptr, false, true);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  return pipeline_config_from_json(j);
}

std::string dump(const json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_figsynth, m) {
  m.doc() = "Synthetic chart QA dataset generator (native core)";

  static py::exception<Error> base(m, "FigsynthError");
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<MissingApiKey> missing_key(m, "MissingApiKey", config_error.ptr());
  static py::exception<ParseFailure> parse_failure(m, "ParseFailure", base.ptr());
  static py::exception<AuthError> auth_error(m, "AuthError", base.ptr());
  static py::exception<GatewayExhausted> exhausted(m, "GatewayExhausted", base.ptr());
  static py::exception<RenderError> render_error(m, "RenderError", base.ptr());
  static py::exception<StoreMissing> store_missing(m, "StoreMissing", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const MissingApiKey& e) {
      missing_key(e.what());
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const ParseFailure& e) {
      parse_failure(e.what());
    } catch (const AuthError& e) {
      auth_error(e.what());
    } catch (const GatewayExhausted& e) {
      exhausted(e.what());
    } catch (const RenderError& e) {
      render_error(e.what());
    } catch (const StoreMissing& e) {
      store_missing(e.what());
    } catch (const Error& e) {
      base(e.what());
    } catch (const json::exception& e) {
      parse_failure(e.what());
    }
  });

  m.def("set_asset_dir", [](const std::string& dir) { set_asset_dir(dir); });
  m.def("chart_types", [] {
    std::vector<std::string> out;
    for (ChartType t : kAllChartTypes) out.emplace_back(chart_type_name(t));
    return out;
  });

  m.def("validate", [](const std::string& data) {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& v : validate_chart_data(data_arg(data)).violations) out.emplace_back(v.path, v.rule, v.message);
    return out;
  });
  m.def("canonical_json", [](const std::string& data) { return canonical_json(data_arg(data)); });
  m.def("parse_chart_data", [](const std::string& raw, const std::string& type, const std::string& topic) {
    return dump(to_json(parse_chart_data(raw, type_arg(type), topic)));
  });
  m.def("random_chart_data", [](const std::string& type, std::uint64_t seed) {
    Rng rng(seed);
    return canonical_json(random_chart_data(type_arg(type), rng, random_topic(rng)));
  });

  m.def("sample_appearance", [](const std::string& type, std::uint64_t seed) {
    Rng rng(seed);
    return dump(to_json(sample_appearance(type_arg(type), rng)));
  });
  m.def("fixed_appearance", [](const std::string& type) { return dump(to_json(fixed_appearance(type_arg(type)))); });
  m.def("appearance_space_size", [](const std::string& type) { return appearance_space_size(type_arg(type)); });
  m.def("render", [](const std::string& data, const std::string& appearance) {
    const ChartData d = data_arg(data);
    const AppearanceSpec app = appearance_arg(appearance);
    RenderedFigure fig;
    {
      py::gil_scoped_release release;
      fig = render_figure(d, app);
    }
    return py::make_tuple(py::bytes(reinterpret_cast<const char*>(fig.png_bytes.data()), fig.png_bytes.size()),
                          fig.content_hash);
  });

  m.def("template_qas", [](const std::string& data, std::uint64_t seed, std::size_t k) {
    Rng rng(seed);
    std::vector<std::string> out;
    for (const auto& qa : instantiate_templates(data_arg(data), rng, k)) out.push_back(dump(to_json(qa)));
    return out;
  });
  m.def(
      "verify_qa",
      [](const std::string& data, const std::string& question, const std::string& answer, double tolerance) {
        const QAPair qa{question, answer, "", QaSource::Llm, false, ""};
        const VerifyResult r = verify_qa(data_arg(data), qa, tolerance);
        return py::make_tuple(std::string(verify_status_name(r.status)), r.oracle_answer);
      },
      py::arg("data"), py::arg("question"), py::arg("answer"), py::arg("tolerance") = kDefaultTolerance);
  m.def("relaxed_match", &relaxed_match, py::arg("pred"), py::arg("gold"), py::arg("tolerance") = kDefaultTolerance);

  m.def("topics", [](const std::string& config) {
    const PipelineConfig cfg = config_arg(config);
    TopicsResult r;
    {
      py::gil_scoped_release release;
      r = cmd_topics(cfg);
    }
    json pools = json::object();
    for (const auto& [t, n] : r.pool_sizes) pools[std::string(chart_type_name(t))] = n;
    return dump({{"pools", pools}, {"queries", r.queries}});
  });
  m.def("generate", [](const std::string& config) {
    const PipelineConfig cfg = config_arg(config);
    GenerateResult r;
    {
      py::gil_scoped_release release;
      r = cmd_generate(cfg);
    }
    return dump({{"requested", r.requested},
                 {"produced", r.produced},
                 {"reused", r.reused},
                 {"failed", r.failures.size()},
                 {"over_threshold", r.over_threshold(cfg.failure_threshold)},
                 {"stats", to_json(r.stats)}});
  });
  m.def("stats", [](const std::string& dir) { return dump(to_json(cmd_stats(dir))); });
  m.def(
      "eval_files",
      [](const std::string& pred, const std::string& gold, double tolerance) {
        return dump(to_json(cmd_eval(pred, gold, tolerance)));
      },
      py::arg("pred"), py::arg("gold"), py::arg("tolerance") = kDefaultTolerance);
  m.def(
      "export_training",
      [](const std::string& dir, const std::string& out, const std::string& token, const std::string& task,
         const std::vector<std::pair<std::string, double>>& splits, std::uint64_t split_seed) {
        ExportOptions opts;
        const auto t = prompt_token_from_name(token);
        if (!t) throw ConfigError("unknown prompt token '" + token + "'");
        opts.token = *t;
        if (task != "qa" && task != "json-parse") throw ConfigError("task must be qa or json-parse");
        opts.task = task == "qa" ? TrainingTask::Qa : TrainingTask::JsonParse;
        for (const auto& [name, fraction] : splits) opts.splits.push_back({name, fraction});
        opts.split_seed = split_seed;
        return cmd_export_training(dir, out, opts);
      },
      py::arg("dataset"), py::arg("out"), py::arg("token") = "chartqa", py::arg("task") = "qa",
      py::arg("splits") = std::vector<std::pair<std::string, double>>{}, py::arg("split_seed") = 0);
}
