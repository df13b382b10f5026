#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "heatscope/cli/runner.hpp"

namespace hc = heatscope::cli;

namespace {

int fail(hc::ExitCode code, const std::string& kind, const std::string& msg,
         const std::vector<hc::Diagnostic>& diags = {}) {
  std::cerr << hc::error_json(code, kind, msg, diags).dump() << "\n";
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heatscope: heat observability and spectral inequality experiments"};
  std::string kind, config_path, out_dir = ".", format = "both";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  app.add_option("kind", kind, "experiment kind")->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "run seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--format", format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return static_cast<int>(hc::ExitCode::usage);
  }

  hc::Json cfg;
  {
    std::ifstream f(config_path);
    if (!f) return fail(hc::ExitCode::io, "io", "cannot open config " + config_path);
    try {
      cfg = hc::Json::parse(f);
    } catch (const hc::Json::parse_error& e) {
      return fail(hc::ExitCode::invalid_config, "invalid_config", e.what());
    }
  }
  hc::RunOptions opt;
  if (*seed_opt) opt.seed = seed;
  opt.threads = threads;
  opt.format = format == "csv" ? hc::Format::csv : format == "json" ? hc::Format::json : hc::Format::both;
  opt.strict = hc::strict_from_env();

  try {
    const hc::RunResult res = hc::run(kind, cfg, opt);
    hc::write_outputs(res, out_dir, opt.format);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << res.kind << " " << res.hash << " seed=" << res.seed << " rows=" << res.table.rows.size() << "\n";
    return 0;
  } catch (const hc::UnknownKind& e) {
    return fail(hc::ExitCode::unknown_kind, "unknown_kind", e.what());
  } catch (const hc::ConfigError& e) {
    return fail(hc::ExitCode::invalid_config, "invalid_config", e.what(), e.diagnostics);
  } catch (const hc::StrictModeError& e) {
    return fail(hc::ExitCode::strict_tolerance, "strict_tolerance", e.what());
  } catch (const heatscope::ContractError& e) {
    return fail(hc::ExitCode::contract, "contract", e.what());
  } catch (const heatscope::ResourceError& e) {
    return fail(hc::ExitCode::resource, "resource", e.what());
  } catch (const heatscope::DomainError& e) {
    return fail(hc::ExitCode::domain, "domain", e.what());
  } catch (const std::system_error& e) {
    return fail(hc::ExitCode::io, "io", e.what());
  } catch (const std::exception& e) {
    return fail(hc::ExitCode::internal, "internal", e.what());
  }
}
