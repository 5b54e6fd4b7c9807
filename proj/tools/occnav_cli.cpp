#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "occnav/channel_analysis.hpp"
#include "occnav/io.hpp"
#include "occnav/scenario.hpp"

using namespace occnav;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed{0};
  bool seed_set{false};
  std::string out_dir{"."};
  std::string format{"json"};
};

Scenario scenario_or_default(const Common& c, bool need_target) {
  Scenario s;
  if (!c.config.empty())
    s = load_scenario(c.config);
  else if (need_target)
    throw ScenarioError("--config is required");
  if (c.seed_set) s.seed = c.seed;
  return s;
}

fs::path out_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / name;
}

void emit(const Common& c, const json& j, const std::string& csv) {
  std::cout << (c.format == "csv" ? csv : j.dump(2) + "\n");
}

int cmd_encode(int id) {
  if (id < 0 || id > 31) throw DomainError("id must be in 0..31");
  std::cout << to_string(encode_id(static_cast<std::uint8_t>(id))) << '\n';
  return 0;
}

int cmd_decode(const Common& c, const std::vector<std::string>& files) {
  std::vector<FrameScan> frames;
  for (const auto& f : files) frames.push_back(read_pgm(f));
  const FrameDecode d = frames.size() == 1 ? decode_frame(frames[0]) : decode_sequence(frames);
  std::ostringstream csv;
  csv << "id,region,center_x,center_y,area_px,major_r,minor_r\n";
  for (const auto& l : d.leds)
    csv << int(l.id.bits) << ',' << to_string(l.region) << ',' << l.blob.center_px.x << ',' << l.blob.center_px.y
        << ',' << l.blob.area_px << ',' << l.blob.major_r << ',' << l.blob.minor_r << '\n';
  emit(c, to_json(d), csv.str());
  return d.leds.empty() && !d.failures.empty() ? 3 : 0;
}

int cmd_simulate_frame(const Common& c, double x, double y, double heading, double t0, int frames) {
  Scenario s = scenario_or_default(c, false);
  const RobotPose pose{x, y, heading};
  const auto scene = build_scene(s.grid, s.cam, pose, s.capture.chip_rate);
  CaptureConfig cap = s.capture;
  cap.frames = frames;
  const auto burst = capture_burst(scene, s.cam, t0, cap, s.seed);
  json truth = json::array();
  for (const auto& led : scene) {
    json e = to_json(led.ellipse);
    truth.push_back(e);
  }
  json written = json::array();
  for (std::size_t k = 0; k < burst.size(); ++k) {
    const fs::path p = out_path(c, "frame_" + std::to_string(k) + ".pgm");
    write_pgm(burst[k], p, json{{"pose", {{"x", x}, {"y", y}, {"heading", heading}}}, {"ellipses", truth}});
    written.push_back(p.string());
  }
  std::cout << json{{"frames", written}, {"leds", scene.size()}}.dump(2) << '\n';
  return 0;
}

int cmd_range(const Common& c, const std::string& blob_file, const std::string& table_file) {
  std::ifstream in(blob_file);
  if (!in) throw IoError("cannot read " + blob_file);
  const json j = json::parse(in);
  const Scenario s = scenario_or_default(c, false);
  const auto table = table_file.empty() ? reference_table1() : RadiusCorrectionTable::from_csv_file(table_file);
  json blobs = j.contains("leds") ? j["leds"] : (j.is_array() ? j : json::array({j}));
  json out = json::array();
  std::ostringstream csv;
  csv << "id,direct_cm,horizontal_cm,image_geometry_cm\n";
  for (const auto& b0 : blobs) {
    const json& b = b0.contains("blob") ? b0["blob"] : b0;
    const double area = b.at("area_px"), major = b.at("major_r"), minor = b.at("minor_r");
    const Point2 px{b.at("center_px")[0].get<double>(), b.at("center_px")[1].get<double>()};
    const double d = ellipse_corrected_distance(area, major, minor, table);
    const double h = s.grid.ceiling_height_hr;
    const double geo = image_geometry_distance(px, s.cam, h);
    const double horiz = d >= h ? horizontal_distance(d, h) : 0.0;
    json r{{"direct_cm", d}, {"horizontal_cm", horiz}, {"image_geometry_cm", geo},
           {"accuracy_vs_image_geometry", accuracy_percent(d, geo)}};
    if (b0.contains("id")) r["id"] = b0["id"];
    csv << (b0.contains("id") ? b0["id"].dump() : "") << ',' << d << ',' << horiz << ',' << geo << '\n';
    out.push_back(r);
  }
  emit(c, out, csv.str());
  return 0;
}

int cmd_navigate(const Common& c) {
  const Scenario s = scenario_or_default(c, true);
  const RunReport r = run_scenario(s);
  write_text(out_path(c, "trajectory.csv"), trajectory_csv(r));
  const fs::path log_path = out_path(c, "visited.jsonl");
  fs::remove(log_path);
  VisitedLog(log_path).append_all(r.steps);
  write_text(out_path(c, "report.json"), to_json(r).dump(2) + "\n");
  std::cout << json{{"arrived", r.arrived},
                    {"moves", r.moves},
                    {"final_error_cm", r.final_error},
                    {"sim_time_s", r.sim_time_s},
                    {"failure", r.failure}}
                   .dump(2)
            << '\n';
  return r.arrived ? 0 : 2;
}

int cmd_ber(const Common& c, std::vector<int> orders, double lo, double hi, double step) {
  const auto pts = ber_sweep(orders, lo, hi, step);
  json j = json::array();
  for (const auto& p : pts)
    j.push_back({{"snr_db", p.snr_db}, {"m", p.m}, {"p_symbol", p.p_symbol}, {"p_bit", p.p_bit}});
  emit(c, j, ber_csv(pts));
  return 0;
}

int cmd_table1(const Common& c, const std::string& table_file) {
  const Scenario s = scenario_or_default(c, false);
  const auto table = table_file.empty() ? reference_table1() : RadiusCorrectionTable::from_csv_file(table_file);
  const auto rep = reproduce_table1(table, s.cam, s.seed);
  write_text(out_path(c, "table1.csv"), table1_csv(rep));
  for (const auto& f : rep.failures) std::cerr << "table1: " << f << '\n';
  std::cout << table1_csv(rep);
  return rep.pass() ? 0 : 2;
}

int cmd_sweeps(const Common& c, const std::string& table_file) {
  const Scenario s = scenario_or_default(c, false);
  const auto table = table_file.empty() ? reference_table1() : RadiusCorrectionTable::from_csv_file(table_file);
  const auto rep = reproduce_sweeps(table, s.cam);
  fs::create_directories(c.out_dir);
  write_sweeps(rep, c.out_dir);
  for (const auto& f : rep.failures) std::cerr << "sweeps: " << f << '\n';
  std::cout << "wrote accuracy_vs_offset.csv, error_vs_led_count.csv, mfsk_ber.csv to " << c.out_dir << '\n';
  return rep.pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occnav: LED-ID navigation simulator"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--config", c.config, "scenario JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", c.seed, "override the scenario seed")->each([&](const std::string&) { c.seed_set = true; });
  app.add_option("--out-dir", c.out_dir, "directory for written files");
  app.add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));

  int id = 0;
  auto* enc = app.add_subcommand("encode", "print the framed chip sequence of an ID");
  enc->add_option("id", id)->required();

  std::vector<std::string> files;
  auto* dec = app.add_subcommand("decode", "decode LED IDs from PGM frames");
  dec->add_option("frames", files)->required()->check(CLI::ExistingFile);

  double x = 0, y = 0, heading = 0, t0 = 0;
  int frames = 1;
  auto* sim = app.add_subcommand("simulate-frame", "render frames with ground-truth sidecars");
  sim->add_option("--x", x);
  sim->add_option("--y", y);
  sim->add_option("--heading", heading);
  sim->add_option("--t0", t0);
  sim->add_option("--frames", frames)->check(CLI::Range(1, 1000));

  std::string blob_file, table_file;
  auto* rng = app.add_subcommand("range", "range blobs from a decode JSON");
  rng->add_option("blobs", blob_file)->required()->check(CLI::ExistingFile);
  rng->add_option("--table", table_file)->check(CLI::ExistingFile);

  auto* nav = app.add_subcommand("navigate", "run a scenario to its target");

  std::vector<int> orders{2, 4, 8};
  double lo = -10, hi = 20, step = 1;
  auto* ber = app.add_subcommand("ber", "MFSK error-rate sweep");
  ber->add_option("--orders", orders);
  ber->add_option("--lo", lo);
  ber->add_option("--hi", hi);
  ber->add_option("--step", step);

  auto* t1 = app.add_subcommand("reproduce-table1", "ellipse-corrected ranging over the calibration sweep");
  t1->add_option("--table", table_file)->check(CLI::ExistingFile);
  auto* sw = app.add_subcommand("reproduce-sweeps", "accuracy, multi-LED and BER sweeps");
  sw->add_option("--table", table_file)->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*enc) return cmd_encode(id);
    if (*dec) return cmd_decode(c, files);
    if (*sim) return cmd_simulate_frame(c, x, y, heading, t0, frames);
    if (*rng) return cmd_range(c, blob_file, table_file);
    if (*nav) return cmd_navigate(c);
    if (*ber) return cmd_ber(c, orders, lo, hi, step);
    if (*t1) return cmd_table1(c, table_file);
    if (*sw) return cmd_sweeps(c, table_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
