// Command-line front end. One JSON (or CSV) document per run.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nhbraid/nhbraid.hpp"
#include "report_json.hpp"

namespace {

using namespace nhbraid;
namespace fs = std::filesystem;

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

std::vector<double> split_numbers(const std::string& text, char sep) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find(sep, start);
    const std::string part = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) throw Error(ErrorKind::InvalidArgument, "cannot parse number '" + part + "'");
    out.push_back(v);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

Point2 parse_point(const std::string& text) {
  const auto v = split_numbers(text, ',');
  if (v.size() != 2) throw Error(ErrorKind::InvalidArgument, "expected 'k1,k2', got '" + text + "'");
  return {v[0], v[1]};
}

// "alpha:k1,k2" or "alpha:k1,k2:radius"
struct PointSpec {
  double alpha = 0.0;
  Point2 point{};
  std::optional<double> radius;
};

PointSpec parse_point_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t end = text.find(':', start);
    parts.push_back(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (parts.size() < 2 || parts.size() > 3)
    throw Error(ErrorKind::InvalidArgument, "expected 'alpha:k1,k2[:radius]', got '" + text + "'");
  PointSpec s;
  const auto a = split_numbers(parts[0], ',');
  if (a.size() != 1) throw Error(ErrorKind::InvalidArgument, "bad alpha in '" + text + "'");
  s.alpha = a[0];
  s.point = parse_point(parts[1]);
  if (parts.size() == 3) {
    const auto r = split_numbers(parts[2], ',');
    if (r.size() != 1) throw Error(ErrorKind::InvalidArgument, "bad radius in '" + text + "'");
    s.radius = r[0];
  }
  return s;
}

struct Output {
  std::string path;
  std::string format = "json";
};

fs::path resolve_output(const std::string& command, const Output& out) {
  const char* dir = std::getenv("NHBRAID_OUTPUT_DIR");
  fs::path p = out.path;
  if (p.empty()) {
    if (!dir || !*dir) return {};
    p = command + "." + out.format;
  }
  if (dir && *dir && p.is_relative()) p = fs::path(dir) / p;
  return p;
}

void emit(const std::string& command, const nlohmann::json& doc, const Output& out) {
  const std::string text = out.format == "csv" ? io::series_csv(doc) : doc.dump(2) + "\n";
  const fs::path path = resolve_output(command, out);
  if (path.empty()) {
    std::cout << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidArgument, "cannot open output file " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::InvalidArgument, "failed writing " + path.string());
}

void add_output_options(CLI::App* sub, Output& out) {
  sub->add_option("-o,--output", out.path, "Output file (default: stdout)");
  sub->add_option("--format", out.format, "json or csv (csv flattens the series block)")
      ->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigenvalue braids and exceptional points of a three-band non-Hermitian model"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // braid-scan
  BraidScanConfig scan;
  std::string scan_center = "0,0";
  Output scan_out;
  auto* s_scan = app.add_subcommand("braid-scan", "Track bands around a loop and read off the braid word");
  s_scan->add_option("--alpha", scan.alpha, "Model parameter alpha")->required();
  s_scan->add_option("--r", scan.r, "Loop radius")->required();
  s_scan->add_option("--center", scan_center, "Loop center k1,k2");
  s_scan->add_option("--n-samples", scan.n_samples, "Minimum theta samples (>= 16)");
  add_output_options(s_scan, scan_out);

  // ep-atlas
  EpAtlasConfig atlas;
  std::vector<std::string> order_at, charge_at;
  std::string alpha_range;
  bool no_trace = false;
  Output atlas_out;
  auto* s_atlas = app.add_subcommand("ep-atlas", "Trace EP trajectories and classify EPs");
  s_atlas->add_option("--alpha-range", alpha_range, "alpha_min,alpha_max (default 0,3.2)");
  s_atlas->add_option("--step", atlas.step, "Continuation step in alpha");
  s_atlas->add_option("--order-at", order_at, "alpha:k1,k2 (repeatable)");
  s_atlas->add_option("--charge-at", charge_at, "alpha:k1,k2:radius (repeatable)");
  s_atlas->add_flag("--no-trace", no_trace, "Skip trajectory tracing");
  add_output_options(s_atlas, atlas_out);

  // transition
  TransitionConfig trans;
  Output trans_out;
  auto* s_trans = app.add_subcommand("transition", "alpha at which the U trajectory crosses the loop radius");
  s_trans->add_option("--r", trans.r, "Loop radius")->required();
  s_trans->add_option("--alpha-max", trans.alpha_max, "Upper end of the traced alpha range");
  s_trans->add_option("--step", trans.step, "Continuation step in alpha");
  add_output_options(s_trans, trans_out);

  // dilate-verify
  DilateConfig dil;
  std::string dil_k = "0.2,0.3";
  std::optional<double> dil_gamma;
  bool dil_literal = false;
  Output dil_out;
  auto* s_dil = app.add_subcommand("dilate-verify", "Check the Hermitian dilation against direct evolution");
  s_dil->add_option("--alpha", dil.alpha, "Model parameter alpha")->required();
  s_dil->add_option("--k", dil_k, "k1,k2");
  s_dil->add_option("--T", dil.T, "Final time");
  s_dil->add_option("--steps", dil.steps, "Time grid intervals");
  s_dil->add_option("--scale", dil.scale, "Dilate scale * H");
  s_dil->add_option("--m0", dil.m0, "M(0) = m0 * I");
  auto* gamma_opt = s_dil->add_option("--shift", dil_gamma, "Dissipative shift gamma (default: automatic)");
  s_dil->add_flag("--literal", dil_literal, "No shift (gamma = 0)")->excludes(gamma_opt);
  add_output_options(s_dil, dil_out);

  // reconstruct-demo
  ReconstructConfig rec;
  std::string rec_center = "0,0";
  std::optional<std::uint64_t> rec_seed;
  bool rec_no_prior = false;
  Output rec_out;
  auto* s_rec = app.add_subcommand("reconstruct-demo", "Forward-model population ratios and invert them");
  s_rec->add_option("--alpha", rec.alpha, "Model parameter alpha")->required();
  s_rec->add_option("--theta", rec.theta, "Angle on the loop (radians)")->required();
  s_rec->add_option("--r", rec.r, "Loop radius");
  s_rec->add_option("--center", rec_center, "Loop center k1,k2");
  s_rec->add_option("--noise", rec.noise, "Relative Gaussian noise on each ratio");
  s_rec->add_option("--trials", rec.trials, "Monte Carlo trials when noise > 0");
  s_rec->add_option("--seed", rec_seed, "Random seed (required when noise > 0)");
  s_rec->add_flag("--no-prior", rec_no_prior, "Do not use alpha as a prior on Re c2");
  add_output_options(s_rec, rec_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*s_scan) {
      scan.center = parse_point(scan_center);
      emit("braid-scan", io::to_json(braid_scan(scan)), scan_out);
    } else if (*s_atlas) {
      if (!alpha_range.empty()) {
        const auto v = split_numbers(alpha_range, ',');
        if (v.size() != 2) throw Error(ErrorKind::InvalidArgument, "--alpha-range expects min,max");
        atlas.alpha_min = v[0];
        atlas.alpha_max = v[1];
      }
      atlas.trace = !no_trace;
      for (const auto& t : order_at) {
        const auto s = parse_point_spec(t);
        if (s.radius) throw Error(ErrorKind::InvalidArgument, "--order-at takes alpha:k1,k2");
        atlas.order_at.push_back({s.alpha, s.point});
      }
      for (const auto& t : charge_at) {
        const auto s = parse_point_spec(t);
        atlas.charge_at.push_back({s.alpha, s.point, s.radius.value_or(0.5)});
      }
      emit("ep-atlas", io::to_json(ep_atlas(atlas)), atlas_out);
    } else if (*s_trans) {
      emit("transition", io::to_json(transition(trans)), trans_out);
    } else if (*s_dil) {
      dil.k = parse_point(dil_k);
      if (dil_literal) dil.gamma = 0.0;
      else if (dil_gamma) dil.gamma = *dil_gamma;
      emit("dilate-verify", io::to_json(dilate_verify(dil)), dil_out);
    } else if (*s_rec) {
      rec.center = parse_point(rec_center);
      rec.seed = rec_seed;
      rec.use_prior = !rec_no_prior;
      emit("reconstruct-demo", io::to_json(reconstruct_demo(rec)), rec_out);
    }
  } catch (const Error& e) {
    std::cerr << "nhbraid: " << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidArgument ? kExitInvalid : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "nhbraid: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
