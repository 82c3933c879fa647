#include "xrpipe/maf_pipeline.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <limits>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>

#include "xrpipe/toy_decoder.hpp"

namespace xrpipe {

std::string_view to_string(Grouping g) noexcept { return g == Grouping::PerObject ? "PER_OBJECT" : "NONE"; }

namespace {

[[noreturn]] void bad_scenario(const std::string& what) { throw Error(ErrorCode::InvalidScenario, what); }

std::string rational_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    bad_scenario(std::string("field '") + key + "' has the wrong type");
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad_scenario("cannot open " + path.string());
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) bad_scenario(path.string() + " is not well-formed JSON");
  return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

ToyStream stream_from(const Json& src, const std::filesystem::path& base, std::uint32_t default_id) {
  if (!src.is_object()) bad_scenario("stream source must be an object");
  if (auto p = src.find("path"); p != src.end()) return read_stream_file(resolve(base, p->get<std::string>()));
  if (auto g = src.find("generate"); g != src.end()) {
    TestStreamSpec spec = parse_stream_spec(*g);
    if (!g->contains("stream_id")) spec.stream_id = default_id;
    return make_test_stream(spec);
  }
  bad_scenario("stream source needs 'path' or 'generate'");
}

FormattingStep parse_formatting_step(const Json& j) {
  if (!j.is_object()) bad_scenario("formatting step must be an object");
  FormattingStep step;
  const std::string op = get_or<std::string>(j, "op", "");
  step.output = get_or<std::string>(j, "output", "");
  if (step.output.empty()) bad_scenario("formatting step needs an output name");
  if (j.contains("inputs")) {
    step.inputs = get_or<std::vector<std::string>>(j, "inputs", {});
  } else if (j.contains("input")) {
    step.inputs = {get_or<std::string>(j, "input", "")};
  }
  if (op == "stack") {
    step.kind = FormattingStep::Kind::Stack;
    step.cols = get_or<std::uint8_t>(j, "cols", 1);
    step.rows = get_or<std::uint8_t>(j, "rows", 1);
  } else if (op == "append") {
    step.kind = FormattingStep::Kind::Append;
  } else if (op == "filter") {
    step.kind = FormattingStep::Kind::Filter;
    for (const auto& t : get_or<std::vector<std::vector<int>>>(j, "keep", {})) {
      if (t.size() != 2) bad_scenario("filter keep entries are [col, row]");
      step.predicate.keep.insert({static_cast<std::uint8_t>(t[0]), static_cast<std::uint8_t>(t[1])});
    }
    if (j.contains("poc_range")) {
      const auto r = get_or<std::vector<std::uint32_t>>(j, "poc_range", {});
      if (r.size() != 2) bad_scenario("poc_range is [first, last]");
      step.predicate.poc_range = std::make_pair(r[0], r[1]);
    }
  } else if (op == "insert") {
    step.kind = FormattingStep::Kind::Insert;
    step.position = get_or<std::size_t>(j, "position", 0);
    const Json unit = get_or<Json>(j, "unit", Json::object());
    step.unit.poc = get_or<std::uint32_t>(unit, "poc", 0);
    step.unit.dts = get_or<Ticks>(unit, "dts", 0);
    step.unit.pts = get_or<Ticks>(unit, "pts", step.unit.dts);
    step.unit.width = get_or<std::uint16_t>(unit, "width", 0);
    step.unit.height = get_or<std::uint16_t>(unit, "height", 0);
    step.unit.tile_col = get_or<std::uint8_t>(unit, "tile_col", 0);
    step.unit.tile_row = get_or<std::uint8_t>(unit, "tile_row", 0);
    step.unit.is_parameter_set = get_or<bool>(unit, "parameter_set", false);
    const std::string hex = get_or<std::string>(unit, "payload_hex", "");
    if (hex.size() % 2 != 0) bad_scenario("payload_hex has odd length");
    for (std::size_t i = 0; i < hex.size(); i += 2) {
      step.unit.payload.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
    }
  } else {
    bad_scenario("unknown formatting op '" + op + "'");
  }
  if (step.inputs.empty()) bad_scenario("formatting step '" + step.output + "' has no inputs");
  return step;
}

}  // namespace

Rational parse_rational(const Json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return Rational(std::stoll(s));
      return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    } catch (const std::exception&) {
      bad_scenario("bad rational '" + s + "'");
    }
  }
  bad_scenario("rational must be an integer or \"num/den\"");
}

TestStreamSpec parse_stream_spec(const Json& j) {
  if (!j.is_object()) bad_scenario("generate spec must be an object");
  TestStreamSpec spec;
  spec.stream_id = get_or<std::uint32_t>(j, "stream_id", 0);
  spec.frames = get_or<std::uint32_t>(j, "frames", spec.frames);
  spec.width = get_or<std::uint16_t>(j, "width", spec.width);
  spec.height = get_or<std::uint16_t>(j, "height", spec.height);
  spec.grid_cols = get_or<std::uint8_t>(j, "grid_cols", spec.grid_cols);
  spec.grid_rows = get_or<std::uint8_t>(j, "grid_rows", spec.grid_rows);
  if (j.contains("fps")) spec.fps = parse_rational(j.at("fps"));
  spec.tick_rate = get_or<std::uint32_t>(j, "tick_rate", spec.tick_rate);
  spec.payload_bytes = get_or<std::uint32_t>(j, "payload_bytes", spec.payload_bytes);
  if (j.contains("profile")) spec.profile = parse_codec_profile(get_or<std::string>(j, "profile", ""));
  return spec;
}

Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) bad_scenario("scenario must be an object");
  Scenario s;

  const Json scene = get_or<Json>(j, "scene", Json());
  if (scene.is_string()) {
    s.scene = read_json_file(resolve(base_dir, scene.get<std::string>()));
  } else if (scene.is_object()) {
    s.scene = scene;
  } else {
    bad_scenario("'scene' must be a path or an inline document");
  }

  const Json engine = get_or<Json>(j, "engine", Json::object());
  s.envelope.max_instances = get_or<std::uint32_t>(engine, "max_instances", 2);
  s.envelope.max_width = get_or<std::uint32_t>(engine, "max_width", 4096);
  s.envelope.max_height = get_or<std::uint32_t>(engine, "max_height", 2304);
  s.envelope.tick_rate = get_or<std::uint32_t>(engine, "tick_rate", 90000);
  if (s.envelope.tick_rate == 0) bad_scenario("engine tick_rate must be positive");
  s.envelope.max_samples_per_tick =
      Rational(get_or<std::int64_t>(engine, "max_samples_per_second", 3840LL * 2160 * 30), s.envelope.tick_rate);
  if (engine.contains("profiles")) {
    s.envelope.profiles.clear();
    for (const auto& p : get_or<std::vector<std::string>>(engine, "profiles", {})) {
      s.envelope.profiles.push_back(parse_codec_profile(p));
    }
  }

  for (const auto& [name, rate] : get_or<std::map<std::string, std::uint32_t>>(j, "decode_rates", {})) {
    if (rate == 0) bad_scenario("decode rate of '" + name + "' must be positive");
    s.decode_rates[name] = rate;
  }
  s.default_decode_rate = get_or<std::uint32_t>(j, "default_decode_rate", 1);
  if (s.default_decode_rate == 0) bad_scenario("default_decode_rate must be positive");
  if (auto fr = j.find("frame_rates"); fr != j.end()) {
    if (!fr->is_object()) bad_scenario("frame_rates must be an object");
    for (auto it = fr->begin(); it != fr->end(); ++it) s.frame_rates[it.key()] = parse_rational(*it);
  }

  const std::string grouping = get_or<std::string>(j, "grouping", "NONE");
  if (grouping == "NONE") {
    s.grouping = Grouping::None;
  } else if (grouping == "PER_OBJECT") {
    s.grouping = Grouping::PerObject;
  } else {
    bad_scenario("grouping must be NONE or PER_OBJECT");
  }
  s.skew_tolerance_pocs = get_or<std::uint32_t>(j, "skew_tolerance_pocs", 0);
  s.steps = get_or<std::uint32_t>(j, "steps", 10);
  s.presentation_tick_per_step = get_or<Ticks>(j, "presentation_tick_per_step", 3000);
  if (s.presentation_tick_per_step <= 0) bad_scenario("presentation_tick_per_step must be positive");
  s.start_tick = get_or<Ticks>(j, "start_tick", 0);

  for (const Json& f : get_or<Json>(j, "formatting", Json::array())) s.formatting.push_back(parse_formatting_step(f));

  // Streams: explicit entries first, then the selected alternative of any
  // media entry not listed.
  const Json streams = get_or<Json>(j, "streams", Json::object());
  if (!streams.is_object()) bad_scenario("'streams' must be an object");
  std::uint32_t next_id = 0;
  for (auto it = streams.begin(); it != streams.end(); ++it) s.streams[it.key()] = stream_from(*it, base_dir, next_id++);
  const auto alternative = get_or<std::size_t>(j, "alternative_index", 0);
  const SceneGraph graph = decode_scene(s.scene);
  for (const Media& m : graph.media) {
    if (s.streams.contains(m.name) || alternative >= m.alternatives.size()) continue;
    const auto path = resolve(base_dir, m.alternatives[alternative].uri);
    if (std::filesystem::exists(path)) s.streams[m.name] = read_stream_file(path);
  }

  if (auto u = j.find("updates"); u != j.end()) {
    const Json updates = u->is_string() ? read_json_file(resolve(base_dir, u->get<std::string>())) : *u;
    try {
      s.updates = parse_transactions(updates);
    } catch (const TransactionFailed& e) {
      bad_scenario(std::string("updates: ") + e.what());
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_json_file(path), path.parent_path());
}

Pipeline::Pipeline(Scenario scenario) : scenario_(std::move(scenario)), engine_(scenario_.envelope) {
  for (const auto& [name, stream] : scenario_.streams) inputs_[name] = Input{stream, {name}};

  for (const FormattingStep& step : scenario_.formatting) {
    std::vector<ToyStream> sources;
    std::vector<std::string> media;
    for (const std::string& in : step.inputs) {
      auto it = inputs_.find(in);
      if (it == inputs_.end()) bad_scenario("formatting input '" + in + "' is not an available stream");
      sources.push_back(std::move(it->second.stream));
      media.insert(media.end(), it->second.media.begin(), it->second.media.end());
      inputs_.erase(it);
    }
    if (inputs_.contains(step.output)) bad_scenario("formatting output '" + step.output + "' already exists");
    ToyStream out;
    switch (step.kind) {
      case FormattingStep::Kind::Stack: {
        StackLayout layout{step.cols, step.rows, {}};
        for (const ToyStream& src : sources) layout.slots.push_back(src.stream_id);
        out = stack(sources, layout);
        break;
      }
      case FormattingStep::Kind::Append:
        out = append(sources);
        break;
      case FormattingStep::Kind::Filter:
        if (sources.size() != 1) bad_scenario("filter takes one input");
        out = filter(sources.front(), step.predicate);
        break;
      case FormattingStep::Kind::Insert:
        if (sources.size() != 1) bad_scenario("insert takes one input");
        out = insert(sources.front(), step.unit, step.position);
        break;
    }
    inputs_[step.output] = Input{std::move(out), std::move(media)};
  }
  for (const auto& [name, input] : inputs_) {
    for (const std::string& m : input.media) input_of_media_[m] = name;
  }

  apply_document(scenario_.scene);
}

Pipeline build_pipeline(const Scenario& scenario) { return Pipeline(scenario); }

const PipelineInstance* Pipeline::instance_for_media(const std::string& media) const {
  auto in = input_of_media_.find(media);
  if (in == input_of_media_.end()) return nullptr;
  auto it = instances_.find(in->second);
  return it == instances_.end() ? nullptr : &it->second;
}

InstanceStats Pipeline::stats_of(const PipelineInstance& p) const {
  const DecoderInstance& d = engine_.instance(p.id);
  InstanceStats s;
  s.name = p.name;
  s.instance = to_underlying(p.id);
  if (p.group) s.group = to_underlying(*p.group);
  s.rate = p.rate;
  s.decoded = d.pictures_decoded;
  s.stalls = d.stall_steps;
  s.state = std::string(to_string(d.state));
  return s;
}

BufferStats Pipeline::buffer_stats_of(const PipelineInstance& p) const {
  const CircularBuffer& b = engine_.output_buffer(p.id);
  BufferStats s;
  s.name = p.name;
  s.capacity = b.capacity();
  s.writes = b.writes();
  s.evictions = b.evictions();
  return s;
}

namespace {

std::string object_of(const Media& m) { return m.object_id.value_or(m.name); }

bool is_admission_error(ErrorCode c) {
  return c == ErrorCode::InsufficientCapacity || c == ErrorCode::OversizedPicture ||
         c == ErrorCode::UnknownCodecProfile || c == ErrorCode::UnknownGroup;
}

}  // namespace

void Pipeline::apply_document(const Json& document) {
  SceneGraph graph = parse_scene(document);
  std::vector<MediaRequest> requests = collect_media_requests(graph);
  for (const Media& m : graph.media) {
    if (!input_of_media_.contains(m.name)) {
      throw Error(ErrorCode::MissingMedia, "no stream provided for media '" + m.name + "'");
    }
  }

  std::vector<std::string> order;
  std::map<std::string, PipelineInstance> desired;
  std::vector<PipelineObject> objects;
  for (const MediaRequest& r : requests) {
    const Media& m = graph.media[r.media];
    const std::string& input = input_of_media_.at(m.name);
    auto [it, fresh] = desired.try_emplace(input);
    PipelineInstance& inst = it->second;
    if (fresh) {
      inst.name = input;
      inst.capacity = 0;
      order.push_back(input);
    }
    if (std::find(inst.media.begin(), inst.media.end(), m.name) == inst.media.end()) {
      inst.media.push_back(m.name);
      const std::string obj = object_of(m);
      auto o = std::find_if(objects.begin(), objects.end(), [&](const PipelineObject& p) { return p.name == obj; });
      if (o == objects.end()) {
        objects.push_back({obj, {m.name}});
      } else if (std::find(o->components.begin(), o->components.end(), m.name) == o->components.end()) {
        o->components.push_back(m.name);
      }
    }
    inst.capacity = std::max<std::size_t>(inst.capacity, static_cast<std::size_t>(graph.buffers[r.buffer].circular->count));
  }

  auto media_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < graph.media.size(); ++i) {
      if (graph.media[i].name == name) return i;
    }
    return graph.media.size();
  };

  std::vector<std::string> admitted;
  std::vector<std::string> new_groups;
  std::string current;
  try {
    for (const std::string& name : order) {
      if (instances_.contains(name)) continue;
      current = name;
      PipelineInstance& inst = desired.at(name);
      const ToyStream& stream = inputs_.at(name).stream;

      if (scenario_.grouping == Grouping::PerObject) {
        const std::string obj = object_of(graph.media[media_index(inst.media.front())]);
        auto g = groups_.find(obj);
        if (g == groups_.end()) {
          g = groups_.emplace(obj, engine_.create_group(scenario_.skew_tolerance_pocs)).first;
          new_groups.push_back(obj);
        }
        inst.group = g->second;
      }

      InstanceRequirements req;
      const GridGeometry geometry = grid_geometry(stream);
      req.width = geometry.width();
      req.height = geometry.height();
      req.codec_profile = stream.codec_profile;
      if (auto fr = scenario_.frame_rates.find(name); fr != scenario_.frame_rates.end()) {
        req.frame_rate = fr->second;
      } else if (auto interval = nominal_frame_interval(stream); interval && *interval > 0) {
        req.frame_rate = Rational(stream.tick_rate, *interval);
      }

      inst.id = engine_.get_instance(req, inst.group);
      admitted.push_back(name);
      auto rate = scenario_.decode_rates.find(name);
      inst.rate = rate == scenario_.decode_rates.end() ? scenario_.default_decode_rate : rate->second;
      engine_.set_config(inst.id, OutputBufferProperties{std::max<std::size_t>(inst.capacity, 1), kPixelFormatGray8});
      engine_.submit_stream(inst.id, stream);
      engine_.set_decode_rate(inst.id, inst.rate);
    }
  } catch (const Error& e) {
    for (const std::string& name : admitted) engine_.release_instance(desired.at(name).id);
    for (const std::string& obj : new_groups) groups_.erase(obj);
    if (is_admission_error(e.code())) throw Error(ErrorCode::AdmissionFailed, current + ": " + e.what());
    throw;
  }

  for (auto it = instances_.begin(); it != instances_.end();) {
    if (desired.contains(it->first)) {
      desired.at(it->first) = PipelineInstance{it->second.name, desired.at(it->first).media, it->second.id,
                                               it->second.group, it->second.rate, it->second.capacity};
      ++it;
      continue;
    }
    retired_.emplace_back(stats_of(it->second), buffer_stats_of(it->second));
    retired_.back().first.state = "RELEASED";
    engine_.release_instance(it->second.id);
    it = instances_.erase(it);
  }

  instances_ = std::move(desired);
  document_ = document;
  graph_ = std::move(graph);
  requests_ = std::move(requests);
  objects_ = std::move(objects);
}

namespace {

struct Occupancy {
  std::size_t min = std::numeric_limits<std::size_t>::max();
  std::size_t max = 0;
};

SyncReport run_scheduled(Pipeline& p, const std::vector<ScheduledTransaction>& updates, const RunOptions& options) {
  const Scenario& sc = p.scenario();
  SyncReport report;
  report.grouping = std::string(to_string(sc.grouping));
  report.skew_tolerance_pocs = sc.skew_tolerance_pocs;
  report.presentation_tick_per_step = sc.presentation_tick_per_step;

  std::map<std::string, ObjectSync> objects;
  std::map<std::string, Occupancy> occupancy;
  std::size_t next_update = 0;

  auto time_of = [&](std::uint32_t s) { return sc.start_tick + static_cast<Ticks>(s) * sc.presentation_tick_per_step; };

  auto produce = [&](std::uint32_t s) {
    const Ticks now = time_of(s);
    while (next_update < updates.size() && updates[next_update].txn.activation_time <= now) {
      const ScheduledTransaction& u = updates[next_update++];
      UpdateRecord record;
      record.transaction = u.source_index;
      record.activation_time = u.txn.activation_time;
      try {
        Json next = apply_transaction(p.document(), u.txn);
        p.apply_document(next);
        record.applied = true;
      } catch (const TransactionFailed& e) {
        record.error = ErrorCode::TransactionFailed;
        record.failed_op = e.op_index();
        record.reason = e.reason();
        record.detail = e.detail();
      } catch (const Error& e) {
        record.error = e.code();
        record.detail = e.what();
      }
      if (!record.applied && options.on_update_failure == UpdateFailurePolicy::Halt) next_update = updates.size();
      report.updates.push_back(std::move(record));
    }
    p.engine().step(sc.presentation_tick_per_step);
  };

  auto consume = [&](std::uint32_t s) {
    PresentationStep step;
    step.step = s;
    step.time = time_of(s);
    for (const PipelineObject& obj : p.objects()) {
      ObjectSync& sync = objects[obj.name];
      sync.name = obj.name;
      for (const std::string& c : obj.components) {
        if (std::find(sync.components.begin(), sync.components.end(), c) == sync.components.end()) {
          sync.components.push_back(c);
        }
      }
      std::int64_t lo = std::numeric_limits<std::int64_t>::max();
      std::int64_t hi = std::numeric_limits<std::int64_t>::min();
      auto& sampled = step.pocs[obj.name];
      for (const std::string& c : obj.components) {
        std::optional<std::uint32_t> poc;
        if (const PipelineInstance* inst = p.instance_for_media(c)) {
          try {
            const Frame frame = p.engine().output_buffer(inst->id).read_frame_at(FrameTime{step.time});
            poc = decode_picture_frame(frame.data).poc;
            if (options.sink) options.sink(s, obj.name, c, frame);
          } catch (const Error&) {
          }
        }
        if (poc) {
          lo = std::min<std::int64_t>(lo, *poc);
          hi = std::max<std::int64_t>(hi, *poc);
        } else {
          ++sync.starved_reads;
        }
        sampled[c] = poc;
      }
      if (hi >= lo) sync.max_poc_skew = std::max(sync.max_poc_skew, hi - lo);
    }
    for (const auto& [name, inst] : p.instances()) {
      const std::size_t stored = p.engine().output_buffer(inst.id).stored();
      Occupancy& o = occupancy[name];
      o.min = std::min(o.min, stored);
      o.max = std::max(o.max, stored);
    }
    step.admitted_samples_per_tick = p.engine().admitted_total();
    step.available_samples_per_tick = sc.envelope.max_samples_per_tick - step.admitted_samples_per_tick;
    report.steps.push_back(std::move(step));
  };

  if (options.threads >= 2) {
    // Strict alternation: the consumer samples step s only after the
    // producer finished it, and the producer starts s+1 only after that.
    std::binary_semaphore may_produce{1};
    std::binary_semaphore may_consume{0};
    std::exception_ptr failure;
    std::thread producer([&] {
      for (std::uint32_t s = 0; s < sc.steps; ++s) {
        may_produce.acquire();
        if (!failure) {
          try {
            produce(s);
          } catch (...) {
            failure = std::current_exception();
          }
        }
        may_consume.release();
      }
    });
    for (std::uint32_t s = 0; s < sc.steps; ++s) {
      may_consume.acquire();
      if (!failure) consume(s);
      may_produce.release();
    }
    producer.join();
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::uint32_t s = 0; s < sc.steps; ++s) {
      produce(s);
      consume(s);
    }
  }

  for (const auto& [name, sync] : objects) report.objects.push_back(sync);
  auto with_occupancy = [&](BufferStats b) {
    if (auto it = occupancy.find(b.name); it != occupancy.end()) {
      b.occupancy_min = it->second.min;
      b.occupancy_max = it->second.max;
    }
    return b;
  };
  for (const auto& [inst, buf] : p.retired()) {
    report.instances.push_back(inst);
    report.buffers.push_back(with_occupancy(buf));
  }
  for (const auto& [name, inst] : p.instances()) {
    report.instances.push_back(p.stats_of(inst));
    report.buffers.push_back(with_occupancy(p.buffer_stats_of(inst)));
  }
  return report;
}

std::vector<ScheduledTransaction> schedule(const std::vector<PatchTransaction>& updates) {
  std::vector<ScheduledTransaction> out;
  for (std::size_t i = 0; i < updates.size(); ++i) out.push_back({i, updates[i]});
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.txn.activation_time < b.txn.activation_time; });
  return out;
}

}  // namespace

SyncReport run(Pipeline& pipeline, const RunOptions& options) { return run_scheduled(pipeline, {}, options); }

SyncReport run_with_updates(Pipeline& pipeline, const std::vector<PatchTransaction>& updates,
                            const RunOptions& options) {
  return run_scheduled(pipeline, schedule(updates), options);
}

SyncReport run_with_updates(Pipeline& pipeline, const UpdateTimeline& timeline, const RunOptions& options) {
  return run_scheduled(pipeline, timeline.transactions(), options);
}

Json report_to_json(const SyncReport& r) {
  Json j;
  j["kind"] = "sync_report";
  j["version"] = 1;
  j["grouping"] = r.grouping;
  j["skew_tolerance_pocs"] = r.skew_tolerance_pocs;
  j["presentation_tick_per_step"] = r.presentation_tick_per_step;

  j["objects"] = Json::array();
  for (const ObjectSync& o : r.objects) {
    j["objects"].push_back({{"name", o.name},
                            {"components", o.components},
                            {"max_poc_skew", o.max_poc_skew},
                            {"starved_reads", o.starved_reads}});
  }
  j["instances"] = Json::array();
  for (const InstanceStats& s : r.instances) {
    Json e = {{"name", s.name}, {"instance", s.instance}, {"rate", s.rate},
              {"decoded", s.decoded}, {"stalls", s.stalls}, {"state", s.state}};
    e["group"] = s.group ? Json(*s.group) : Json();
    j["instances"].push_back(std::move(e));
  }
  j["buffers"] = Json::array();
  for (const BufferStats& b : r.buffers) {
    Json e = {{"name", b.name}, {"capacity", b.capacity}, {"writes", b.writes}, {"evictions", b.evictions}};
    e["occupancy_min"] = b.occupancy_min ? Json(*b.occupancy_min) : Json();
    e["occupancy_max"] = b.occupancy_max ? Json(*b.occupancy_max) : Json();
    j["buffers"].push_back(std::move(e));
  }
  j["steps"] = Json::array();
  for (const PresentationStep& s : r.steps) {
    Json objects = Json::object();
    for (const auto& [obj, comps] : s.pocs) {
      Json c = Json::object();
      for (const auto& [name, poc] : comps) c[name] = poc ? Json(*poc) : Json();
      objects[obj] = std::move(c);
    }
    j["steps"].push_back({{"step", s.step},
                          {"time", s.time},
                          {"pocs", std::move(objects)},
                          {"admitted_samples_per_tick", rational_string(s.admitted_samples_per_tick)},
                          {"available_samples_per_tick", rational_string(s.available_samples_per_tick)}});
  }
  j["updates"] = Json::array();
  for (const UpdateRecord& u : r.updates) j["updates"].push_back(update_record_to_json(u));
  return j;
}

std::string emit_report(const SyncReport& r, ReportFormat format) {
  if (format == ReportFormat::Structured) return report_to_json(r).dump(2) + "\n";

  std::ostringstream out;
  out << "grouping=" << r.grouping << " skew_tolerance_pocs=" << r.skew_tolerance_pocs
      << " steps=" << r.steps.size() << " tick_per_step=" << r.presentation_tick_per_step << "\n";
  for (const ObjectSync& o : r.objects) {
    out << "object " << o.name << " components=";
    for (std::size_t i = 0; i < o.components.size(); ++i) out << (i ? "," : "") << o.components[i];
    out << " max_poc_skew=" << o.max_poc_skew << " starved_reads=" << o.starved_reads << "\n";
  }
  for (const InstanceStats& s : r.instances) {
    out << "instance " << s.name << " id=" << s.instance << " group=" << (s.group ? std::to_string(*s.group) : "-")
        << " rate=" << s.rate << " decoded=" << s.decoded << " stalls=" << s.stalls << " state=" << s.state << "\n";
  }
  for (const BufferStats& b : r.buffers) {
    out << "buffer " << b.name << " capacity=" << b.capacity
        << " occupancy_min=" << (b.occupancy_min ? std::to_string(*b.occupancy_min) : "-")
        << " occupancy_max=" << (b.occupancy_max ? std::to_string(*b.occupancy_max) : "-") << " writes=" << b.writes
        << " evictions=" << b.evictions << "\n";
  }
  for (const PresentationStep& s : r.steps) {
    out << "step " << s.step << " t=" << s.time;
    for (const auto& [obj, comps] : s.pocs) {
      out << " " << obj << "[";
      bool first = true;
      for (const auto& [name, poc] : comps) {
        out << (first ? "" : " ") << name << "=" << (poc ? std::to_string(*poc) : "-");
        first = false;
      }
      out << "]";
    }
    out << "\n";
  }
  for (const UpdateRecord& u : r.updates) out << format_update_record(u) << "\n";
  return out.str();
}

}  // namespace xrpipe
