#include <cstdint>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "haarsense/config.hpp"
#include "haarsense/errors.hpp"
#include "haarsense/json_io.hpp"
#include "haarsense/sensitivity.hpp"
#include "haarsense/svg_plot.hpp"

namespace {

using namespace haarsense;

constexpr int kExitPhaseWrap = 2;
constexpr int kExitPacking = 3;
constexpr int kExitIo = 4;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> convention;
  std::optional<std::string> plot;
  std::optional<int> threads;
};

CoefficientConvention parse_convention(const std::string& name) {
  if (name == "integral") return CoefficientConvention::Integral;
  if (name == "paper") return CoefficientConvention::PaperConstant;
  throw FormatError("convention must be 'integral' or 'paper'");
}

Provenance make_provenance(const std::string& protocol, const RunOptions& options,
                           const std::set<int>& orders = {}) {
  Provenance p;
  p.protocol = protocol;
  p.repetitions = options.noiseless ? 0 : options.repetitions;
  p.noiseless = options.noiseless;
  p.seed = options.seed;
  p.convention = to_string(options.convention);
  p.measured_orders.assign(orders.begin(), orders.end());
  return p;
}

std::string provenance_label(const Provenance& p) {
  std::string label = p.protocol;
  label += p.noiseless ? " noiseless" : " M=" + std::to_string(p.repetitions);
  label += " seed=" + std::to_string(p.seed);
  return label;
}

void cmd_transform(const std::string& in_csv, const std::string& out_json, int order,
                   const GlobalFlags& flags) {
  const SampledSignal signal = load_csv(in_csv);
  CoefficientsFile file;
  file.coeffs = haar_transform(signal, order);
  file.duration_us = signal.duration_us;
  file.provenance.protocol = "transform";
  file.provenance.noiseless = true;
  save_coefficients(file, out_json);
  if (flags.plot) {
    Reconstruction recon = haar_reconstruct_points(file.coeffs, order);
    recon.provenance = "transform order " + std::to_string(order);
    write_step_plot_svg(recon, signal.duration_us, *flags.plot);
  }
}

void cmd_simulate(const std::string& config_path, const GlobalFlags& flags) {
  RunConfig config = load_run_config(config_path);
  if (flags.seed) config.options.seed = *flags.seed;
  if (flags.convention) config.options.convention = parse_convention(*flags.convention);
  if (flags.threads) config.options.threads = *flags.threads;
  if (flags.plot) config.output.plot = *flags.plot;

  const SampledSignal signal = realize_signal(config.signal);
  const std::uint64_t plan_reps = config.options.noiseless ? 1 : config.options.repetitions;

  Reconstruction recon;
  RunBudget budget;
  std::string kind = to_string(config.kind);

  switch (config.kind) {
    case ProtocolKind::Haar: {
      const HaarCoefficients coeffs =
          run_haar_protocol(signal, config.sensor, config.order, config.options);
      budget = run_budget(plan_haar(config.order, signal.duration_us, plan_reps,
                                    config.options.overhead_us));
      CoefficientsFile file{coeffs, signal.duration_us,
                            make_provenance(kind, config.options)};
      if (config.output.coefficients) save_coefficients(file, *config.output.coefficients);
      recon = reconstruct(coeffs, config.order, provenance_label(file.provenance));
      break;
    }
    case ProtocolKind::SparseHaar: {
      const HaarCoefficients coeffs =
          run_sparse_haar(signal, config.sensor, config.orders, config.options);
      budget = run_budget(plan_sparse_haar(config.orders, signal.duration_us, plan_reps,
                                           config.options.overhead_us));
      CoefficientsFile file{coeffs, signal.duration_us,
                            make_provenance(kind, config.options, config.orders)};
      if (config.output.coefficients) save_coefficients(file, *config.output.coefficients);
      recon = reconstruct(coeffs, coeffs.max_order, provenance_label(file.provenance));
      break;
    }
    case ProtocolKind::Walsh: {
      const WalshProtocolResult result =
          run_walsh_protocol(signal, config.sensor, config.order, config.options);
      budget = result.budget;
      WalshFile file{result.spectrum, signal.duration_us,
                     make_provenance(kind, config.options)};
      if (config.output.coefficients) save_walsh(file, *config.output.coefficients);
      recon = reconstruct_walsh(result.spectrum, provenance_label(file.provenance));
      break;
    }
    case ProtocolKind::Ramsey: {
      if (config.output.coefficients) {
        throw FormatError("ramsey produces no coefficients document");
      }
      recon = run_ramsey_protocol(signal, config.sensor, config.points, config.options);
      budget = run_budget(plan_ramsey(config.points, signal.duration_us, plan_reps,
                                      config.options.overhead_us));
      break;
    }
  }

  if (config.output.budget) save_budget(budget, kind, *config.output.budget);
  if (config.output.reconstruction) {
    save_reconstruction_csv(recon, signal.duration_us, *config.output.reconstruction);
  }
  if (config.output.plot) {
    write_step_plot_svg(recon, signal.duration_us, *config.output.plot);
  }
}

// Insert _<order> before the extension: recon.csv -> recon_3.csv
std::string order_path(const std::string& base, int order) {
  const auto dot = base.find_last_of('.');
  const std::string suffix = "_" + std::to_string(order);
  if (dot == std::string::npos || base.find('/', dot) != std::string::npos) {
    return base + suffix;
  }
  return base.substr(0, dot) + suffix + base.substr(dot);
}

void cmd_reconstruct(const std::string& coeffs_json, const std::string& out_csv, int order,
                     bool progressive, const GlobalFlags& flags) {
  const CoefficientsFile file = load_coefficients(coeffs_json);
  const int top = order > 0 ? order : file.coeffs.max_order;
  if (top > file.coeffs.max_order) {
    throw FormatError("requested order exceeds the stored max_order");
  }
  Reconstruction last;
  if (progressive) {
    for (int k = 1; k <= top; ++k) {
      last = reconstruct(file.coeffs, k, provenance_label(file.provenance) +
                                             " order=" + std::to_string(k));
      save_reconstruction_csv(last, file.duration_us, order_path(out_csv, k));
    }
  } else {
    last = reconstruct(file.coeffs, top, provenance_label(file.provenance) +
                                             " order=" + std::to_string(top));
    save_reconstruction_csv(last, file.duration_us, out_csv);
  }
  if (flags.plot) {
    write_step_plot_svg(last, file.duration_us, *flags.plot);
  }
}

void cmd_detect(const std::string& coeffs_json, const std::string& out_json,
                const std::vector<int>& orders, double threshold,
                const GlobalFlags& flags) {
  const CoefficientsFile file = load_coefficients(coeffs_json);
  if (orders.empty()) {
    throw FormatError("detect needs at least one order");
  }
  for (int i : orders) {
    if (i < 1 || i > file.coeffs.max_order) {
      throw FormatError("order " + std::to_string(i) + " not present in the document");
    }
  }
  const std::set<int> wanted(orders.begin(), orders.end());

  // Band-limited view: keep only the requested levels, zero mean.
  HaarCoefficients band = HaarCoefficients::zeros(*wanted.rbegin());
  for (int i : wanted) {
    band.levels[static_cast<std::size_t>(i - 1)] =
        file.coeffs.levels[static_cast<std::size_t>(i - 1)];
  }
  Reconstruction recon = reconstruct(band, band.max_order,
                                     provenance_label(file.provenance) + " band");
  const EventDetection detection = detect_events(recon, threshold);
  save_events(detection, band.max_order, file.duration_us, out_json);
  if (flags.plot) {
    write_step_plot_svg(recon, file.duration_us, *flags.plot);
  }
}

void cmd_sensitivity(const std::string& out_csv, double t2, double t2_star,
                     std::uint64_t repetitions, double duration, int n_max, double gamma) {
  save_comparison_csv(compare_protocols(t2, t2_star, repetitions, duration, n_max, gamma),
                      out_csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo-wavelet time-resolved magnetic sensing simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  std::string convention_value;
  std::string plot_value;
  int threads_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the run seed");
  auto* conv_opt =
      app.add_option("--convention", convention_value, "Coefficient convention")
          ->check(CLI::IsMember({"integral", "paper"}));
  auto* plot_opt = app.add_option("--plot", plot_value, "Write a step-plot SVG");
  auto* threads_opt =
      app.add_option("--threads", threads_value, "Worker threads for Monte Carlo")
          ->check(CLI::PositiveNumber);

  // transform
  auto* transform = app.add_subcommand("transform", "Direct transform of a signal CSV");
  std::string tr_in, tr_out;
  int tr_order = 4;
  transform->add_option("input", tr_in, "Signal CSV")->required();
  transform->add_option("output", tr_out, "Coefficients JSON")->required();
  transform->add_option("--order", tr_order, "Transform order n")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a sensing protocol from a config");
  std::string sim_config;
  simulate->add_option("config", sim_config, "Run configuration JSON")->required();

  // reconstruct
  auto* reconstruct_cmd =
      app.add_subcommand("reconstruct", "Waveform from a coefficients document");
  std::string rc_in, rc_out;
  int rc_order = 0;
  bool rc_progressive = false;
  reconstruct_cmd->add_option("coefficients", rc_in, "Coefficients JSON")->required();
  reconstruct_cmd->add_option("output", rc_out, "Reconstruction CSV")->required();
  reconstruct_cmd->add_option("--order", rc_order, "Reconstruction order (default: max)");
  reconstruct_cmd->add_flag("--progressive", rc_progressive,
                            "Emit one CSV per order 1..n");

  // detect
  auto* detect = app.add_subcommand("detect", "Sparse event detection on a band");
  std::string dt_in, dt_out;
  std::vector<int> dt_orders;
  double dt_threshold = 5.0;
  detect->add_option("coefficients", dt_in, "Coefficients JSON")->required();
  detect->add_option("output", dt_out, "Events JSON")->required();
  detect->add_option("--orders", dt_orders, "Orders forming the band")
      ->required()
      ->delimiter(',');
  detect->add_option("--threshold", dt_threshold, "Detection threshold in sigmas");

  // sensitivity
  auto* sensitivity = app.add_subcommand("sensitivity", "Protocol comparison table");
  std::string sn_out;
  double sn_t2 = 300.0, sn_t2_star = 3.0, sn_duration = 100.0;
  double sn_gamma = SensorParams{}.gamma_rad_per_s_per_t;
  std::uint64_t sn_reps = 1000000;
  int sn_nmax = 10;
  sensitivity->add_option("output", sn_out, "Comparison CSV")->required();
  sensitivity->add_option("--t2", sn_t2, "T2, microseconds");
  sensitivity->add_option("--t2-star", sn_t2_star, "T2*, microseconds");
  sensitivity->add_option("--repetitions", sn_reps, "M per measurement");
  sensitivity->add_option("--duration", sn_duration, "Signal duration T, microseconds");
  sensitivity->add_option("--n-max", sn_nmax, "Largest order");
  sensitivity->add_option("--gamma", sn_gamma, "Gyromagnetic ratio, rad/s/T");

  CLI11_PARSE(app, argc, argv);

  if (*seed_opt) flags.seed = seed_value;
  if (*conv_opt) flags.convention = convention_value;
  if (*plot_opt) flags.plot = plot_value;
  if (*threads_opt) flags.threads = threads_value;

  try {
    if (*transform) {
      cmd_transform(tr_in, tr_out, tr_order, flags);
    } else if (*simulate) {
      cmd_simulate(sim_config, flags);
    } else if (*reconstruct_cmd) {
      cmd_reconstruct(rc_in, rc_out, rc_order, rc_progressive, flags);
    } else if (*detect) {
      cmd_detect(dt_in, dt_out, dt_orders, dt_threshold, flags);
    } else if (*sensitivity) {
      if (flags.plot) {
        throw FormatError("--plot is not available for sensitivity");
      }
      cmd_sensitivity(sn_out, sn_t2, sn_t2_star, sn_reps, sn_duration, sn_nmax, sn_gamma);
    }
  } catch (const PhaseWrapError& e) {
    std::cerr << "phase wrap: " << e.what() << '\n';
    return kExitPhaseWrap;
  } catch (const PackingError& e) {
    std::cerr << "infeasible packing: " << e.what() << '\n';
    return kExitPacking;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
