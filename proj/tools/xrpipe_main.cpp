// xrpipe command-line front end.
//
// Exit codes: 0 success, 1 the input was rejected (invalid scene, failed
// patch), 2 usage or I/O error.

#include <filesystem>
#include <algorithm>
#include <fstream>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xrpipe/error.hpp"
#include "xrpipe/input_formatting.hpp"
#include "xrpipe/maf_pipeline.hpp"
#include "xrpipe/scene_description.hpp"
#include "xrpipe/scene_updates.hpp"
#include "xrpipe/std_model.hpp"
#include "xrpipe/toy_stream.hpp"

using namespace xrpipe;

namespace {

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedDocument, "cannot open " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::MalformedDocument, path + " is not well-formed JSON");
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidScenario, "cannot write " + path);
  out << text;
}

std::pair<std::uint8_t, std::uint8_t> parse_pair(const std::string& s, char sep) {
  const auto at = s.find(sep);
  if (at == std::string::npos) throw CLI::ValidationError("expected A" + std::string(1, sep) + "B, got " + s);
  return {static_cast<std::uint8_t>(std::stoul(s.substr(0, at))), static_cast<std::uint8_t>(std::stoul(s.substr(at + 1)))};
}

std::string stream_summary(const ToyStream& s) {
  const auto pictures = pictures_of(s);
  return "stream_id=" + std::to_string(s.stream_id) + " profile=" + std::string(to_string(s.codec_profile)) +
         " grid=" + std::to_string(s.grid_cols) + "x" + std::to_string(s.grid_rows) +
         " units=" + std::to_string(s.units.size()) + " pictures=" + std::to_string(pictures.size());
}

Json stream_to_json(const ToyStream& s) {
  Json units = Json::array();
  for (const AccessUnit& u : s.units) {
    units.push_back({{"poc", u.poc}, {"dts", u.dts}, {"pts", u.pts}, {"width", u.width}, {"height", u.height},
                     {"tile", {u.tile_col, u.tile_row}}, {"parameter_set", u.is_parameter_set},
                     {"payload_bytes", u.payload.size()}});
  }
  const GridGeometry g = grid_geometry(s);
  return {{"stream_id", s.stream_id},
          {"codec_profile", std::string(to_string(s.codec_profile))},
          {"tick_rate", s.tick_rate},
          {"grid", {s.grid_cols, s.grid_rows}},
          {"picture_size", {g.width(), g.height()}},
          {"nominal_frame_interval", nominal_frame_interval(s) ? Json(*nominal_frame_interval(s)) : Json()},
          {"units", std::move(units)}};
}

int cmd_validate(const std::string& path, const std::string& format) {
  // A missing file is a usage error, not an invalid scene.
  if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::MalformedDocument, "cannot open " + path);
  Json report = {{"scene", path}};
  std::vector<SceneViolation> violations;
  std::vector<SceneViolation> warnings;
  try {
    const SceneGraph g = decode_scene(read_json(path));
    violations = validate_scene(g);
    warnings = scene_warnings(g);
  } catch (const Error& e) {
    // Structural failures arrive as "Code: /path: message".
    std::string rest = e.what();
    rest = rest.substr(std::min(rest.size(), to_string(e.code()).size() + 2));
    std::string where = "/";
    if (const auto colon = rest.find(": "); !rest.empty() && rest[0] == '/' && colon != std::string::npos) {
      where = rest.substr(0, colon);
      rest = rest.substr(colon + 2);
    }
    violations.push_back({e.code(), where, rest});
  }
  auto to_json = [](const std::vector<SceneViolation>& list) {
    Json arr = Json::array();
    for (const auto& v : list) {
      arr.push_back({{"code", std::string(to_string(v.code))}, {"path", v.path}, {"message", v.message}});
    }
    return arr;
  };
  if (format == "structured") {
    report["valid"] = violations.empty();
    report["violations"] = to_json(violations);
    report["warnings"] = to_json(warnings);
    std::cout << report.dump(2) << "\n";
  } else {
    std::cout << (violations.empty() ? "VALID " : "INVALID ") << path << "\n";
    for (const auto& v : violations) std::cout << "  error   " << format_violation(v) << "\n";
    for (const auto& w : warnings) std::cout << "  warning " << format_violation(w) << "\n";
  }
  return violations.empty() ? 0 : 1;
}

int cmd_patch(const std::string& scene_path, const std::string& patch_path, std::optional<Ticks> at,
              const std::string& out_path) {
  const Json scene = read_json(scene_path);
  std::vector<PatchTransaction> txns;
  try {
    txns = parse_transactions(read_json(patch_path));
  } catch (const TransactionFailed& e) {
    std::cout << "FAILED txn=0 op=" << e.op_index() << " reason=" << to_string(e.reason()) << ": " << e.detail() << "\n";
    return 1;
  }
  const auto violations = validate_scene(decode_scene(scene));
  if (!violations.empty()) {
    std::cout << "FAILED input scene is invalid: " << format_violation(violations.front()) << "\n";
    return 1;
  }
  std::vector<std::size_t> order(txns.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return txns[a].activation_time < txns[b].activation_time; });

  Json doc = scene;
  for (std::size_t i : order) {
    if (at && txns[i].activation_time > *at) continue;
    try {
      doc = apply_transaction(doc, txns[i]);
    } catch (const TransactionFailed& e) {
      std::cout << "FAILED txn=" << i << " t=" << txns[i].activation_time << " op=" << e.op_index()
                << " reason=" << to_string(e.reason()) << ": " << e.detail() << "\n";
      return 1;
    }
  }
  write_text(out_path, doc.dump(2) + "\n");
  return 0;
}

int cmd_run(const std::string& scenario_path, const std::string& updates_path, const std::string& report_path,
            int threads, const std::string& format, const std::string& on_failure) {
  Scenario scenario = load_scenario(scenario_path);
  std::vector<PatchTransaction> updates = scenario.updates;
  if (!updates_path.empty()) updates = parse_transactions(read_json(updates_path));
  Pipeline pipeline = build_pipeline(scenario);
  RunOptions options;
  options.threads = threads;
  if (on_failure == "halt") options.on_update_failure = UpdateFailurePolicy::Halt;
  const SyncReport report = run_with_updates(pipeline, updates, options);
  const auto fmt = format == "text" ? ReportFormat::Text : ReportFormat::Structured;
  write_text(report_path, emit_report(report, fmt));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xrpipe: scene-driven media pipeline toolkit"};
  app.require_subcommand(1);

  // validate
  std::string scene_path, format = "text";
  auto* validate = app.add_subcommand("validate", "Validate a scene document");
  validate->add_option("scene", scene_path, "Scene document (.gltf)")->required();
  validate->add_option("--format", format, "text|structured")->check(CLI::IsMember({"text", "structured"}));

  // patch
  std::string patch_path, out_path;
  std::optional<Ticks> patch_time;
  auto* patch = app.add_subcommand("patch", "Apply scene-update transactions");
  patch->add_option("scene", scene_path)->required();
  patch->add_option("patch", patch_path, "Patch, envelope, or list of envelopes")->required();
  patch->add_option("-t,--time", patch_time, "Apply transactions with activation_time <= time");
  patch->add_option("-o,--output", out_path, "Write the post-image here (default stdout)");

  // run
  std::string scenario_path, updates_path, report_path;
  std::string run_format = "structured";
  std::string on_failure = "skip";
  int threads = 1;
  auto* run_cmd = app.add_subcommand("run", "Run a pipeline scenario");
  run_cmd->add_option("scenario", scenario_path)->required();
  run_cmd->add_option("--updates", updates_path, "Update timeline (overrides the scenario's)");
  run_cmd->add_option("--report", report_path, "Write the report here (default stdout)");
  run_cmd->add_option("--threads", threads)->check(CLI::IsMember({1, 2}));
  run_cmd->add_option("--format", run_format)->check(CLI::IsMember({"text", "structured"}));
  run_cmd->add_option("--on-update-failure", on_failure, "skip|halt")->check(CLI::IsMember({"skip", "halt"}));

  // format
  auto* fmt = app.add_subcommand("format", "Input formatting on toy streams");
  fmt->require_subcommand(1);
  std::vector<std::string> inputs;
  std::string fmt_out;
  std::vector<std::string> keep;
  std::string pocs;
  auto* f_filter = fmt->add_subcommand("filter", "Keep a subset of tiles");
  f_filter->add_option("input", inputs)->required()->expected(1);
  f_filter->add_option("-o,--output", fmt_out)->required();
  f_filter->add_option("--keep", keep, "Tile as COL,ROW (repeatable)")->required();
  f_filter->add_option("--pocs", pocs, "Inclusive poc range FIRST:LAST");

  std::size_t position = 0;
  AccessUnit unit;
  std::string tile = "0,0", payload_hex;
  bool parameter_set = false;
  auto* f_insert = fmt->add_subcommand("insert", "Inject one access unit");
  f_insert->add_option("input", inputs)->required()->expected(1);
  f_insert->add_option("-o,--output", fmt_out)->required();
  f_insert->add_option("--position", position)->required();
  f_insert->add_option("--poc", unit.poc);
  f_insert->add_option("--dts", unit.dts);
  f_insert->add_option("--pts", unit.pts);
  f_insert->add_option("--width", unit.width);
  f_insert->add_option("--height", unit.height);
  f_insert->add_option("--tile", tile, "COL,ROW");
  f_insert->add_option("--payload-hex", payload_hex);
  f_insert->add_flag("--parameter-set", parameter_set);

  auto* f_append = fmt->add_subcommand("append", "Concatenate streams in time");
  f_append->add_option("inputs", inputs)->required();
  f_append->add_option("-o,--output", fmt_out)->required();

  int cols = 2, rows = 2;
  auto* f_stack = fmt->add_subcommand("stack", "Compose single-tile streams into one tiled stream");
  f_stack->add_option("inputs", inputs, "Sources in row-major slot order")->required();
  f_stack->add_option("-o,--output", fmt_out)->required();
  f_stack->add_option("--cols", cols);
  f_stack->add_option("--rows", rows);

  // std
  std::vector<std::string> std_streams;
  std::string rate = "1", std_report_path, std_format = "lines";
  Ticks start = 0, decode_delay = 0;
  std::uint64_t buffer_size = 0;
  auto* std_cmd = app.add_subcommand("std", "System target decoder conformance check");
  std_cmd->add_option("streams", std_streams)->required();
  std_cmd->add_option("--rate", rate, "Arrival rate in bytes per tick (N or N/D)");
  std_cmd->add_option("--start", start);
  std_cmd->add_option("--buffer-size", buffer_size)->required();
  std_cmd->add_option("--decode-delay", decode_delay);
  std_cmd->add_option("--report", std_report_path);
  std_cmd->add_option("--format", std_format)->check(CLI::IsMember({"lines", "structured"}));

  // gen
  TestStreamSpec spec;
  std::string gen_out, fps = "30", grid = "1x1", profile;
  int gen_width = 64, gen_height = 64;
  auto* gen = app.add_subcommand("gen", "Write a synthetic toy stream");
  gen->add_option("-o,--output", gen_out)->required();
  gen->add_option("--stream-id", spec.stream_id);
  gen->add_option("--frames", spec.frames);
  gen->add_option("--width", gen_width);
  gen->add_option("--height", gen_height);
  gen->add_option("--grid", grid, "COLSxROWS");
  gen->add_option("--fps", fps, "N or N/D");
  gen->add_option("--tick-rate", spec.tick_rate);
  gen->add_option("--payload-bytes", spec.payload_bytes);
  gen->add_option("--profile", profile, "TOY_BASE|TOY_TILED");

  // inspect
  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Dump a toy stream as JSON");
  inspect->add_option("stream", inspect_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(scene_path, format);
    if (patch->parsed()) return cmd_patch(scene_path, patch_path, patch_time, out_path);
    if (run_cmd->parsed()) return cmd_run(scenario_path, updates_path, report_path, threads, run_format, on_failure);

    if (fmt->parsed()) {
      std::vector<ToyStream> streams;
      for (const auto& p : inputs) streams.push_back(read_stream_file(p));
      ToyStream out;
      if (f_filter->parsed()) {
        TilePredicate pred;
        for (const auto& k : keep) pred.keep.insert(parse_pair(k, ','));
        if (!pocs.empty()) {
          const auto at = pocs.find(':');
          if (at == std::string::npos) throw CLI::ValidationError("--pocs expects FIRST:LAST");
          pred.poc_range = std::make_pair(static_cast<std::uint32_t>(std::stoul(pocs.substr(0, at))),
                                          static_cast<std::uint32_t>(std::stoul(pocs.substr(at + 1))));
        }
        out = filter(streams.front(), pred);
      } else if (f_insert->parsed()) {
        std::tie(unit.tile_col, unit.tile_row) = parse_pair(tile, ',');
        unit.is_parameter_set = parameter_set;
        if (payload_hex.size() % 2) throw CLI::ValidationError("--payload-hex has odd length");
        for (std::size_t i = 0; i < payload_hex.size(); i += 2) {
          unit.payload.push_back(static_cast<std::uint8_t>(std::stoul(payload_hex.substr(i, 2), nullptr, 16)));
        }
        out = insert(streams.front(), unit, position);
      } else if (f_append->parsed()) {
        out = append(streams);
      } else {
        StackLayout layout{static_cast<std::uint8_t>(cols), static_cast<std::uint8_t>(rows), {}};
        for (const auto& s : streams) layout.slots.push_back(s.stream_id);
        out = stack(streams, layout);
      }
      write_stream_file(fmt_out, out);
      std::cout << "wrote " << fmt_out << " " << stream_summary(out) << "\n";
      return 0;
    }

    if (std_cmd->parsed()) {
      std::vector<ToyStream> streams;
      std::vector<ArrivalSchedule> schedules;
      const Rational r = parse_rational(Json(rate));
      for (const auto& p : std_streams) {
        streams.push_back(read_stream_file(p));
        schedules.push_back(constant_rate_schedule(streams.back(), r, start));
      }
      StdConfig config;
      config.streams.push_back({buffer_size, decode_delay, std::nullopt});
      const StdTrace trace = simulate_std(streams, schedules, config);
      std::string text;
      if (std_format == "structured") {
        Json report = std_report(trace);
        Json cdm = Json::array();
        for (const CdmViolation& v : check_cdm_rules(trace, streams)) {
          cdm.push_back({{"rule", std::string(to_string(v.rule))}, {"stream", v.stream_id}, {"detail", v.detail}});
        }
        report["cdm_violations"] = std::move(cdm);
        text = report.dump(2) + "\n";
      } else {
        text = export_trace_lines(trace);
      }
      write_text(std_report_path, text);
      return 0;
    }

    if (gen->parsed()) {
      spec.width = static_cast<std::uint16_t>(gen_width);
      spec.height = static_cast<std::uint16_t>(gen_height);
      const auto x = grid.find('x');
      if (x == std::string::npos) throw CLI::ValidationError("--grid expects COLSxROWS");
      spec.grid_cols = static_cast<std::uint8_t>(std::stoul(grid.substr(0, x)));
      spec.grid_rows = static_cast<std::uint8_t>(std::stoul(grid.substr(x + 1)));
      spec.fps = parse_rational(Json(fps));
      if (!profile.empty()) spec.profile = parse_codec_profile(profile);
      const ToyStream s = make_test_stream(spec);
      write_stream_file(gen_out, s);
      std::cout << "wrote " << gen_out << " " << stream_summary(s) << "\n";
      return 0;
    }

    if (inspect->parsed()) {
      std::cout << stream_to_json(read_stream_file(inspect_path)).dump(2) << "\n";
      return 0;
    }
  } catch (const TransactionFailed& e) {
    std::cout << "FAILED " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "xrpipe: " << e.what() << "\n";
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "xrpipe: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
