#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/fixtures.hpp"
#include "gradeprobe/harness.hpp"
#include "gradeprobe/remote_grader.hpp"
#include "gradeprobe/report.hpp"
#include "gradeprobe/rule_grader.hpp"
#include "gradeprobe/stub_server.hpp"
#include "gradeprobe/surrogate.hpp"

namespace gp = gradeprobe;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitTransport = 3;
constexpr int kExitCapability = 4;

struct RunConfig {
  std::string dataset;
  std::string grader = "surrogate";
  std::string endpoint = "http://127.0.0.1:8080";
  std::string model = "default";
  std::string auth_token;
  std::string grader_config;
  std::string template_path;
  std::string method = "gcg";
  std::string placement = "search";
  std::string role_string;
  std::string scope = "incorrect-only";
  std::string basis = "model";
  bool exclude_already_target = false;
  std::size_t suffix_len = 20;
  int iters = 500;
  std::size_t top_k = 64;
  std::size_t batch = 64;
  std::uint64_t seed = 42;
  std::string init_token = "!";
  double cas_alpha = 0.5;
  double cas_beta = 0.5;
  double cas_gamma = 0.5;
  double cas_cap = 0.99;
  int workers = 1;
  std::string out;
  std::vector<std::string> formats = {"json"};
};

void apply_environment(RunConfig& config) {
  if (const char* token = std::getenv("GRADEPROBE_TOKEN")) config.auth_token = token;
  if (const char* endpoint = std::getenv("GRADEPROBE_ENDPOINT")) config.endpoint = endpoint;
  if (const char* model = std::getenv("GRADEPROBE_MODEL")) config.model = model;
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gp::ConfigError("cannot open config file " + path);
  json parsed;
  try {
    parsed = json::parse(in);
  } catch (const json::parse_error& e) {
    throw gp::ConfigError("invalid config file " + path + ": " + e.what());
  }

  auto get = [&](const char* key, auto& into) {
    if (parsed.contains(key)) into = parsed[key].get<std::decay_t<decltype(into)>>();
  };
  get("dataset", config.dataset);
  get("grader", config.grader);
  get("endpoint", config.endpoint);
  get("model", config.model);
  get("token", config.auth_token);
  get("grader-config", config.grader_config);
  get("template", config.template_path);
  get("method", config.method);
  get("placement", config.placement);
  get("role-string", config.role_string);
  get("scope", config.scope);
  get("basis", config.basis);
  get("exclude-already-target", config.exclude_already_target);
  get("suffix-len", config.suffix_len);
  get("iters", config.iters);
  get("top-k", config.top_k);
  get("batch", config.batch);
  get("seed", config.seed);
  get("init-token", config.init_token);
  get("cas-alpha", config.cas_alpha);
  get("cas-beta", config.cas_beta);
  get("cas-gamma", config.cas_gamma);
  get("cas-cap", config.cas_cap);
  get("workers", config.workers);
  get("out", config.out);
  get("format", config.formats);
}

gp::SurrogateSpec surrogate_spec_from_json(const json& parsed) {
  gp::SurrogateSpec spec = gp::fixtures::planted_spec();
  if (parsed.contains("dims")) spec.dims = parsed["dims"].get<std::size_t>();
  if (parsed.contains("seed")) spec.seed = parsed["seed"].get<std::uint64_t>();
  if (parsed.contains("bias")) spec.bias = parsed["bias"].get<double>();
  if (parsed.contains("noise_scale")) spec.noise_scale = parsed["noise_scale"].get<double>();
  if (parsed.contains("rules")) {
    spec.rules.clear();
    for (const auto& [key, value] : parsed["rules"].items())
      spec.rules[key] = value.get<double>();
  }
  if (parsed.contains("vulnerable_tokens")) {
    spec.vulnerable_tokens.clear();
    for (const auto& [key, value] : parsed["vulnerable_tokens"].items())
      spec.vulnerable_tokens[key] = value.get<double>();
  }
  return spec;
}

std::unique_ptr<gp::GradingModel> make_grader(const RunConfig& config) {
  if (config.grader == "surrogate") {
    if (config.grader_config.empty()) {
      return std::make_unique<gp::SurrogateGrader>(gp::fixtures::planted_grader());
    }
    std::ifstream in(config.grader_config);
    if (!in) throw gp::ConfigError("cannot open grader config " + config.grader_config);
    json parsed;
    try {
      parsed = json::parse(in);
    } catch (const json::parse_error& e) {
      throw gp::ConfigError(std::string("invalid grader config: ") + e.what());
    }
    gp::Vocabulary vocab = parsed.contains("vocab")
                               ? gp::Vocabulary::from_tokens(
                                     parsed["vocab"].get<std::vector<std::string>>(),
                                     parsed.value("oov_index", std::size_t{1}))
                               : gp::fixtures::planted_vocab();
    return std::make_unique<gp::SurrogateGrader>(std::move(vocab),
                                                 surrogate_spec_from_json(parsed));
  }
  if (config.grader == "rule") return std::make_unique<gp::RuleGrader>();
  if (config.grader == "remote") {
    gp::RemoteGraderConfig remote;
    remote.base_url = config.endpoint;
    remote.model = config.model;
    remote.auth_token = config.auth_token;
    remote.seed = config.seed;
    return std::make_unique<gp::RemoteGrader>(remote);
  }
  throw gp::ConfigError("unknown grader \"" + config.grader +
                        "\" (expected surrogate, rule or remote)");
}

gp::PromptTemplate load_template(const RunConfig& config) {
  if (config.template_path.empty()) return gp::PromptTemplate::default_template();
  return gp::PromptTemplate::from_file(config.template_path);
}

gp::PipelineConfig pipeline_config(const RunConfig& config) {
  gp::PipelineConfig pipeline;

  const auto scope = gp::scope_mode_from_name(config.scope);
  if (!scope) throw gp::ConfigError("unknown scope \"" + config.scope + "\"");
  const auto basis = gp::basis_from_name(config.basis);
  if (!basis) throw gp::ConfigError("unknown basis \"" + config.basis + "\"");
  pipeline.scope = {*scope, *basis, config.exclude_already_target};

  const auto method = gp::method_from_name(config.method);
  if (!method) throw gp::ConfigError("unknown method \"" + config.method + "\"");
  pipeline.method.kind = *method;
  pipeline.method.gcg.suffix_len = config.suffix_len;
  pipeline.method.gcg.max_iters = config.iters;
  pipeline.method.gcg.top_k = config.top_k;
  pipeline.method.gcg.batch = config.batch;
  pipeline.method.gcg.seed = config.seed;
  pipeline.method.gcg.init_token = config.init_token;
  if (*method == gp::AttackMethodKind::RolePlay) {
    if (config.placement != "search") {
      const auto variant = gp::placement_from_code(config.placement);
      if (!variant)
        throw gp::ConfigError("unknown placement \"" + config.placement +
                              "\" (expected R-S, R-S-R, S-R, R-P, P-R, R-P-R or search)");
      pipeline.method.placement = *variant;
    }
    if (!config.role_string.empty()) pipeline.method.role_string = config.role_string;
  }

  pipeline.cas = {config.cas_alpha, config.cas_beta, config.cas_gamma, config.cas_cap};
  pipeline.cas.validate();
  pipeline.workers = std::max(1, config.workers);
  return pipeline;
}

std::vector<gp::ReportFormat> parse_formats(const RunConfig& config) {
  std::vector<gp::ReportFormat> formats;
  for (const auto& name : config.formats) {
    const auto format = gp::report_format_from_name(name);
    if (!format) throw gp::ConfigError("unknown format \"" + name + "\"");
    if (std::find(formats.begin(), formats.end(), *format) == formats.end())
      formats.push_back(*format);
  }
  if (formats.empty()) formats.push_back(gp::ReportFormat::Json);
  return formats;
}

void write_or_print(const RunConfig& config, gp::ReportFormat format,
                    const std::string& content) {
  if (config.out.empty()) {
    std::cout << content;
    return;
  }
  const std::string path = config.out + std::string(gp::report_format_extension(format));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gp::Error("cannot write output file " + path);
  out << content;
  std::cerr << "wrote " << path << "\n";
}

gp::Dataset load_required_dataset(const RunConfig& config) {
  if (config.dataset.empty())
    throw CLI::RequiredError("--dataset");  // usage error, exit 2
  return gp::load_dataset(config.dataset);
}

std::string summary_line(const gp::EvalReport& report) {
  return "asr=" + gp::format_double(report.asr) + " cas=" + gp::format_double(report.cas) +
         " ratio=" + gp::format_double(report.ratio) +
         " a_before=" + gp::format_double(report.a_before) +
         " a_after=" + gp::format_double(report.a_after);
}

int cmd_grade(const RunConfig& config) {
  const auto dataset = load_required_dataset(config);
  const auto grader = make_grader(config);
  const auto tmpl = load_template(config);
  const auto baseline =
      gp::baseline_grade(dataset, *grader, tmpl, std::max(1, config.workers));

  for (const auto format : parse_formats(config))
    write_or_print(config, format,
                   gp::emit_baseline_report(baseline, dataset, grader->name(), format));
  std::cout << "accuracy=" << gp::format_double(baseline.accuracy)
            << " correct_fraction=" << gp::format_double(baseline.correct_fraction) << "\n";
  return kExitOk;
}

int cmd_attack(const RunConfig& config) {
  if (config.dataset.empty()) throw CLI::RequiredError("--dataset");
  const auto pipeline = pipeline_config(config);
  const auto grader = make_grader(config);

  // A capability mismatch must be reported before any network or compute
  // work happens.
  if (pipeline.method.kind == gp::AttackMethodKind::Gcg &&
      grader->capability() != gp::Capability::WhiteBox)
    throw gp::CapabilityError("gcg needs a white-box grader, \"" + grader->name() +
                              "\" is black-box");

  const auto dataset = load_required_dataset(config);
  const auto tmpl = load_template(config);
  const auto report = gp::run_pipeline(dataset, *grader, tmpl, pipeline);

  for (const auto format : parse_formats(config))
    write_or_print(config, format, gp::emit_report(report, format));
  std::cout << summary_line(report) << "\n";
  return kExitOk;
}

int cmd_sweep_placements(const RunConfig& config) {
  if (config.method != "role-play" && config.method != "role_play")
    throw gp::ConfigError("sweep-placements requires --method role-play");

  if (config.dataset.empty()) throw CLI::RequiredError("--dataset");
  auto pipeline = pipeline_config(config);
  const auto grader = make_grader(config);
  const auto dataset = load_required_dataset(config);
  const auto tmpl = load_template(config);

  const auto baseline =
      gp::baseline_grade(dataset, *grader, tmpl, pipeline.workers);

  std::vector<gp::EvalReport> reports;
  for (const auto variant : gp::enumerate_placements()) {
    pipeline.method.placement = variant;
    reports.push_back(
        gp::run_pipeline_with_baseline(baseline, dataset, *grader, tmpl, pipeline));
    std::cout << gp::placement_code(variant) << " asr=" << gp::format_double(reports.back().asr)
              << " cas=" << gp::format_double(reports.back().cas) << "\n";
  }

  for (const auto format : parse_formats(config)) {
    const auto content = format == gp::ReportFormat::Json
                             ? gp::emit_reports_json(reports)
                             : gp::emit_reports_markdown(reports);
    write_or_print(config, format, content);
  }
  return kExitOk;
}

int cmd_compare_scopes(const RunConfig& config) {
  if (config.dataset.empty()) throw CLI::RequiredError("--dataset");
  auto pipeline = pipeline_config(config);
  const auto grader = make_grader(config);
  const auto dataset = load_required_dataset(config);
  const auto tmpl = load_template(config);

  // One shared baseline for both scopes.
  const auto baseline = gp::baseline_grade(dataset, *grader, tmpl, pipeline.workers);

  pipeline.scope.mode = gp::ScopeMode::IncorrectOnly;
  const auto incorrect_only =
      gp::run_pipeline_with_baseline(baseline, dataset, *grader, tmpl, pipeline);
  pipeline.scope.mode = gp::ScopeMode::Bidirectional;
  const auto bidirectional =
      gp::run_pipeline_with_baseline(baseline, dataset, *grader, tmpl, pipeline);

  std::cout << "incorrect-only " << summary_line(incorrect_only) << "\n";
  std::cout << "bidirectional " << summary_line(bidirectional) << "\n";

  const std::vector<gp::EvalReport> both = {incorrect_only, bidirectional};
  for (const auto format : parse_formats(config)) {
    const auto content = format == gp::ReportFormat::Json
                             ? gp::emit_scope_comparison_json(incorrect_only, bidirectional)
                             : gp::emit_reports_markdown(both);
    write_or_print(config, format, content);
  }
  return kExitOk;
}

std::atomic<bool> g_stop_requested{false};

int cmd_stub_serve(const std::string& script_path, int port, const std::string& path) {
  const auto script = script_path.empty() ? gp::fixtures::end_sensitive_stub_script()
                                          : gp::StubScript::from_file(script_path);
  gp::StubServer server(script, path);
  const int bound = server.start(port);
  std::cout << "stub grader listening on http://127.0.0.1:" << bound << path << "\n"
            << std::flush;

  std::signal(SIGINT, [](int) { g_stop_requested = true; });
  std::signal(SIGTERM, [](int) { g_stop_requested = true; });
  while (!g_stop_requested)
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
}

int cmd_fixtures(const std::string& out_dir) {
  gp::fixtures::write_bundled_files(out_dir);
  std::cout << "fixture files written under " << out_dir << "\n";
  return kExitOk;
}

void add_common_options(CLI::App* cmd, RunConfig& config) {
  static std::string config_file_echo;
  cmd->add_option("--config", config_file_echo,
                  "Configuration file (JSON, lower precedence than flags)");
  cmd->add_option("--dataset", config.dataset, "Dataset file (JSONL)");
  cmd->add_option("--grader", config.grader, "Grader kind: surrogate | rule | remote")
      ->capture_default_str();
  cmd->add_option("--endpoint", config.endpoint, "Chat-completions base URL (remote grader)")
      ->capture_default_str();
  cmd->add_option("--model", config.model, "Model id sent to the endpoint")
      ->capture_default_str();
  cmd->add_option("--grader-config", config.grader_config,
                  "Surrogate construction file (JSON)");
  cmd->add_option("--template", config.template_path,
                  "Grading prompt template file (built-in default otherwise)");
  cmd->add_option("--workers", config.workers, "Parallel worker count")->capture_default_str();
  cmd->add_option("--out", config.out, "Output path prefix (stdout when omitted)");
  cmd->add_option("--format", config.formats, "Report formats: json, markdown")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--seed", config.seed, "Random seed")->capture_default_str();
}

void add_attack_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--method", config.method, "Attack method: gcg | role-play")
      ->capture_default_str();
  cmd->add_option("--placement", config.placement,
                  "Role-play placement code or \"search\"")
      ->capture_default_str();
  cmd->add_option("--role-string", config.role_string,
                  "Role-play string override (built-in default otherwise)");
  cmd->add_option("--scope", config.scope, "Attack scope: incorrect-only | bidirectional")
      ->capture_default_str();
  cmd->add_option("--basis", config.basis, "Selection basis: model | truth")
      ->capture_default_str();
  cmd->add_flag("--exclude-already-target", config.exclude_already_target,
                "Skip items the model already grades as the target");
  cmd->add_option("--suffix-len", config.suffix_len, "Attack suffix length in tokens")
      ->capture_default_str();
  cmd->add_option("--iters", config.iters, "Suffix optimization iteration cap")
      ->capture_default_str();
  cmd->add_option("--top-k", config.top_k, "Gradient candidates kept per suffix position")
      ->capture_default_str();
  cmd->add_option("--batch", config.batch, "Candidate substitutions evaluated per iteration")
      ->capture_default_str();
  cmd->add_option("--init-token", config.init_token, "Initial suffix token")
      ->capture_default_str();
  cmd->add_option("--cas-alpha", config.cas_alpha, "Camouflage score Beta shape alpha")
      ->capture_default_str();
  cmd->add_option("--cas-beta", config.cas_beta, "Camouflage score Beta shape beta")
      ->capture_default_str();
  cmd->add_option("--cas-gamma", config.cas_gamma, "Camouflage score ASR exponent")
      ->capture_default_str();
  cmd->add_option("--cas-cap", config.cas_cap, "Camouflage score ratio cap")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig config;
  apply_environment(config);

  // The config file layers between environment and flags, so it has to be
  // found before CLI11 parses.
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    try {
      if (arg == "--config" && i + 1 < argc) {
        apply_config_file(config, argv[i + 1]);
      } else if (arg.rfind("--config=", 0) == 0) {
        apply_config_file(config, std::string(arg.substr(9)));
      }
    } catch (const gp::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  CLI::App app{"Adversarial robustness probe for short-answer grading models"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "Configuration file (JSON, lower precedence than flags)");

  auto* grade = app.add_subcommand("grade", "Grade a dataset and report baseline accuracy");
  add_common_options(grade, config);

  auto* attack = app.add_subcommand(
      "attack", "Run the full pipeline: baseline, target selection, attack, evaluation");
  add_common_options(attack, config);
  add_attack_options(attack, config);

  auto* sweep = app.add_subcommand("sweep-placements",
                                   "Run the role-play attack once per placement variant");
  add_common_options(sweep, config);
  add_attack_options(sweep, config);

  auto* scopes = app.add_subcommand(
      "compare-scopes", "Run incorrect-only and bidirectional scopes over a shared baseline");
  add_common_options(scopes, config);
  add_attack_options(scopes, config);

  std::string stub_script;
  int stub_port = 0;
  std::string stub_path = "/v1/chat/completions";
  auto* stub = app.add_subcommand("stub-serve",
                                  "Serve a scripted chat-completions grader for testing");
  stub->add_option("--script", stub_script,
                   "Stub script file (JSON; built-in end-sensitive script otherwise)");
  stub->add_option("--port", stub_port, "Port (0 picks an ephemeral port)")
      ->capture_default_str();
  stub->add_option("--path", stub_path, "Serving path")->capture_default_str();

  std::string fixtures_dir = "data";
  auto* fixtures = app.add_subcommand("fixtures", "Write the bundled fixture files");
  fixtures->add_option("--out-dir", fixtures_dir, "Target directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (grade->parsed()) return cmd_grade(config);
    if (attack->parsed()) return cmd_attack(config);
    if (sweep->parsed()) return cmd_sweep_placements(config);
    if (scopes->parsed()) return cmd_compare_scopes(config);
    if (stub->parsed()) return cmd_stub_serve(stub_script, stub_port, stub_path);
    if (fixtures->parsed()) return cmd_fixtures(fixtures_dir);
  } catch (const CLI::RequiredError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const gp::CapabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCapability;
  } catch (const gp::TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const gp::EndpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const gp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const gp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
