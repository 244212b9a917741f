// SPDX-License-Identifier: Apache-2.0
//
// nmcprof: analyze dynamic instruction traces, generate synthetic ones,
// and spot-check the engine against the brute-force reference path.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nmc/report.hpp"
#include "nmc/synth.hpp"
#include "nmc/trace.hpp"

namespace {

struct AnalyzeArgs {
  std::string trace_path;
  std::optional<std::uint64_t> word_size;
  std::uint64_t max_line = 64;
  unsigned entropy_lsb_max = 16;
  bool memory_deps = false;
  std::string format = "json";
  std::string out_path;
};

void add_analyze_options(CLI::App* cmd, AnalyzeArgs& args) {
  cmd->add_option("trace", args.trace_path, "Trace file (JSON lines)")->required();
  cmd->add_option("--word-size", args.word_size,
                  "Override the trace word size (bytes, power of two)");
  cmd->add_option("--max-line", args.max_line,
                  "Largest cache line size for reuse metrics (bytes)");
  cmd->add_option("--entropy-lsb-max", args.entropy_lsb_max,
                  "Largest LSB cut in the entropy sweep");
  cmd->add_flag("--memory-deps", args.memory_deps,
                "Honor store->load dependencies in schedules");
  cmd->add_option("--format", args.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--out", args.out_path, "Write the report here instead of stdout");
}

nmc::AnalyzeConfig config_of(const AnalyzeArgs& args) {
  nmc::AnalyzeConfig config;
  config.word_size_override = args.word_size;
  config.max_line_size = args.max_line;
  config.entropy_lsb_max = args.entropy_lsb_max;
  config.memory_deps = args.memory_deps;
  return config;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + out_path + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::ios_base::failure("write to " + out_path + " failed");
}

void run_report(const AnalyzeArgs& args, bool use_oracle) {
  const nmc::Trace trace = nmc::ingest_file(args.trace_path);
  const nmc::MetricsReport report = use_oracle
                                        ? nmc::oracle_analyze(trace, config_of(args))
                                        : nmc::analyze(trace, config_of(args));
  write_output(args.format == "csv" ? nmc::emit_csv(report) : nmc::emit_json(report),
               args.out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-memory-computing workload characterization"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "Compute all metrics for a trace file");
  add_analyze_options(analyze_cmd, analyze_args);

  AnalyzeArgs oracle_args;
  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle", "Compute metrics through the brute-force reference path");
  add_analyze_options(oracle_cmd, oracle_args);

  std::string gen_kind;
  std::uint64_t gen_n = 0;
  nmc::GeneratorSpec gen_spec;
  std::string gen_out;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Emit a synthetic trace");
  gen_cmd->add_option("kind", gen_kind, "Generator kind")->required();
  gen_cmd->add_option("--seed", gen_spec.seed, "PRNG seed");
  gen_cmd->add_option("--n", gen_n,
                      "Primary size: accesses, iterations, or matrix dimension");
  gen_cmd->add_option("--stride", gen_spec.stride, "Scan stride in bytes");
  gen_cmd->add_option("--lanes", gen_spec.lanes, "Parallel lanes per iteration");
  gen_cmd->add_option("--space-bytes", gen_spec.space_bytes,
                      "Address space for random_stream");
  gen_cmd->add_option("--word-size", gen_spec.word_size, "Access size in bytes");
  gen_cmd->add_option("--out", gen_out, "Write the trace here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (analyze_cmd->parsed()) {
      run_report(analyze_args, false);
    } else if (oracle_cmd->parsed()) {
      run_report(oracle_args, true);
    } else {
      const auto kind = nmc::generator_kind_from_name(gen_kind);
      if (!kind) {
        std::string known;
        for (const std::string& name : nmc::generator_kind_names()) {
          if (!known.empty()) known += ", ";
          known += name;
        }
        throw std::invalid_argument("unknown generator kind '" + gen_kind +
                                    "' (known: " + known + ")");
      }
      gen_spec.kind = *kind;
      if (gen_cmd->count("--n") > 0) {
        if (*kind == nmc::GeneratorKind::data_parallel_loop ||
            *kind == nmc::GeneratorKind::dependent_chain_loop)
          gen_spec.iterations = gen_n;
        else
          gen_spec.count = gen_n;
      }
      write_output(nmc::serialize(nmc::generate(gen_spec)), gen_out);
    }
  } catch (const nmc::TraceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
