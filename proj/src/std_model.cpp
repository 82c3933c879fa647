#include "xrpipe/std_model.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "xrpipe/error.hpp"

namespace xrpipe {

std::string_view to_string(StdVerdict verdict) noexcept {
  switch (verdict) {
    case StdVerdict::Conformant: return "CONFORMANT";
    case StdVerdict::Overflow: return "OVERFLOW";
    case StdVerdict::Underflow: return "UNDERFLOW";
  }
  return "UNKNOWN";
}

std::string_view to_string(CdmRule rule) noexcept {
  switch (rule) {
    case CdmRule::OneDecoderPerStream: return "rule_i_one_decoder_per_stream";
    case CdmRule::OnePresentationPerDecode: return "rule_ii_one_presentation_per_decode";
    case CdmRule::PresentationTimestamp: return "rule_iii_presentation_timestamp";
  }
  return "unknown";
}

ArrivalSchedule constant_rate_schedule(const ToyStream& stream, Rational rate_bytes_per_tick, Ticks start) {
  if (rate_bytes_per_tick <= 0) throw Error(ErrorCode::InvariantViolation, "arrival rate must be positive");
  ArrivalSchedule schedule;
  schedule.stream_id = stream.stream_id;
  std::uint64_t total = 0;
  for (const AccessUnit& u : stream.units) total += u.payload.size();
  schedule.entries.reserve(total);
  for (std::uint64_t i = 0; i < total; ++i) {
    const Rational offset = Rational(static_cast<std::int64_t>(i)) / rate_bytes_per_tick;
    schedule.entries.push_back({i, start + offset.numerator() / offset.denominator()});
  }
  return schedule;
}

std::vector<StdAccessUnit> std_access_units(const ToyStream& stream) {
  std::vector<StdAccessUnit> units;
  std::uint64_t offset = 0;
  std::uint64_t pending_first = 0;
  std::uint64_t pending_size = 0;
  const bool tiled = stream.codec_profile == CodecProfile::ToyTiled;
  std::optional<std::uint32_t> last_poc;

  for (const AccessUnit& u : stream.units) {
    const std::uint64_t size = u.payload.size();
    if (u.is_parameter_set) {
      if (pending_size == 0) pending_first = offset;
      pending_size += size;
    } else if (tiled && last_poc == u.poc && !units.empty() && pending_size == 0) {
      units.back().size += size;
    } else {
      StdAccessUnit au;
      au.first_byte = pending_size > 0 ? pending_first : offset;
      au.size = pending_size + size;
      au.pts = u.pts;
      units.push_back(au);
      pending_size = 0;
      last_poc = u.poc;
    }
    offset += size;
  }
  if (pending_size > 0 && !units.empty()) units.back().size += pending_size;
  return units;
}

namespace {

enum class EventKind { Arrival = 0, Decode = 1 };

struct SimEvent {
  Ticks time;
  EventKind kind;
  std::size_t stream;
  std::uint32_t j;
  std::uint64_t bytes;
};

const StdStreamConfig& config_for(const StdConfig& config, std::size_t n) {
  if (config.streams.size() == 1) return config.streams.front();
  return config.streams.at(n);
}

}  // namespace

StdTrace simulate_std(std::span<const ToyStream> streams, std::span<const ArrivalSchedule> schedules,
                      const StdConfig& config) {
  if (schedules.size() != streams.size()) {
    throw Error(ErrorCode::InvariantViolation, "need exactly one arrival schedule per stream");
  }
  if (config.streams.size() != 1 && config.streams.size() != streams.size()) {
    throw Error(ErrorCode::InvariantViolation, "need one STD config entry per stream, or a single shared one");
  }

  StdTrace trace;
  std::vector<SimEvent> events;
  std::vector<std::vector<Ticks>> last_byte_arrival(streams.size());

  for (std::size_t n = 0; n < streams.size(); ++n) {
    const ToyStream& stream = streams[n];
    const ArrivalSchedule& schedule = schedules[n];
    const StdStreamConfig& cfg = config_for(config, n);
    if (cfg.buffer_size_bytes == 0) throw Error(ErrorCode::InvariantViolation, "buffer_size_bytes must be positive");
    if (schedule.stream_id != stream.stream_id) {
      throw Error(ErrorCode::InvariantViolation, "schedule " + std::to_string(n) + " belongs to another stream");
    }

    std::uint64_t total = 0;
    for (const AccessUnit& u : stream.units) total += u.payload.size();
    if (schedule.entries.size() != total) {
      throw Error(ErrorCode::InvariantViolation, "schedule for stream " + std::to_string(stream.stream_id) +
                                                     " does not cover every byte");
    }
    for (std::size_t i = 0; i < schedule.entries.size(); ++i) {
      const ArrivalEntry& e = schedule.entries[i];
      if (e.byte_index != i || (i > 0 && e.time < schedule.entries[i - 1].time)) {
        throw Error(ErrorCode::InvariantViolation, "schedule byte indices must be dense and times non-decreasing");
      }
    }

    // Bytes arriving in the same tick form one arrival event.
    for (std::size_t i = 0; i < schedule.entries.size();) {
      std::size_t end = i;
      while (end < schedule.entries.size() && schedule.entries[end].time == schedule.entries[i].time) ++end;
      events.push_back({schedule.entries[i].time, EventKind::Arrival, n, 0, end - i});
      trace.arrivals.push_back({stream.stream_id, schedule.entries[i].time, end - i});
      i = end;
    }

    const auto units = std_access_units(stream);
    if (cfg.explicit_td && cfg.explicit_td->size() != units.size()) {
      throw Error(ErrorCode::InvariantViolation, "explicit_td must list one decode time per access unit");
    }
    StdStreamTrace st;
    st.stream_id = stream.stream_id;
    for (std::uint32_t j = 0; j < units.size(); ++j) {
      const Ticks last = schedule.entries[units[j].first_byte + units[j].size - 1].time;
      last_byte_arrival[n].push_back(last);
      const Ticks td = cfg.explicit_td ? (*cfg.explicit_td)[j] : last + cfg.decode_delay;
      events.push_back({td, EventKind::Decode, n, j, units[j].size});
      st.decodes.push_back({j, td, static_cast<std::uint32_t>(n), units[j].size});
    }

    // Presentation order is pts order; k indexes presentation units.
    std::vector<std::uint32_t> order(units.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return units[a].pts < units[b].pts; });
    for (std::uint32_t k = 0; k < order.size(); ++k) {
      st.presentations.push_back({k, order[k], units[order[k]].pts});
    }
    std::stable_sort(st.decodes.begin(), st.decodes.end(),
                     [](const StdDecodeEvent& a, const StdDecodeEvent& b) { return a.time < b.time; });
    trace.streams.push_back(std::move(st));
  }

  // Within a tick, arrivals land before decodes.
  std::stable_sort(events.begin(), events.end(), [](const SimEvent& a, const SimEvent& b) {
    return std::tie(a.time, a.kind, a.stream, a.j) < std::tie(b.time, b.kind, b.stream, b.j);
  });
  std::stable_sort(trace.arrivals.begin(), trace.arrivals.end(),
                   [](const StdArrivalEvent& a, const StdArrivalEvent& b) {
                     return std::tie(a.time, a.stream_id) < std::tie(b.time, b.stream_id);
                   });

  std::vector<std::int64_t> occupancy(streams.size(), 0);
  auto flag = [&](StdVerdict verdict, Ticks time, std::size_t n) {
    if (trace.verdict != StdVerdict::Conformant) return;
    trace.verdict = verdict;
    trace.violation_time = time;
    trace.violation_stream = streams[n].stream_id;
  };

  for (const SimEvent& e : events) {
    StdStreamTrace& st = trace.streams[e.stream];
    const auto bytes = static_cast<std::int64_t>(e.bytes);
    if (e.kind == EventKind::Arrival) {
      occupancy[e.stream] += bytes;
      st.bytes_in += e.bytes;
      if (occupancy[e.stream] > static_cast<std::int64_t>(config_for(config, e.stream).buffer_size_bytes)) {
        flag(StdVerdict::Overflow, e.time, e.stream);
      }
    } else {
      if (e.time < last_byte_arrival[e.stream][e.j]) flag(StdVerdict::Underflow, e.time, e.stream);
      occupancy[e.stream] -= bytes;
      st.bytes_out += e.bytes;
    }
    st.peak_occupancy = std::max(st.peak_occupancy, occupancy[e.stream]);
    trace.occupancy.push_back({e.time, streams[e.stream].stream_id, occupancy[e.stream]});
  }
  for (std::size_t n = 0; n < streams.size(); ++n) trace.streams[n].final_occupancy = occupancy[n];
  return trace;
}

std::vector<CdmViolation> check_cdm_rules(const StdTrace& trace, std::span<const ToyStream> streams) {
  std::vector<CdmViolation> violations;
  std::map<std::uint32_t, std::set<std::uint32_t>> streams_per_decoder;

  for (const StdStreamTrace& st : trace.streams) {
    std::set<std::uint32_t> decoders;
    for (const StdDecodeEvent& d : st.decodes) {
      decoders.insert(d.decoder);
      streams_per_decoder[d.decoder].insert(st.stream_id);
    }
    if (decoders.size() > 1) {
      violations.push_back({CdmRule::OneDecoderPerStream, st.stream_id,
                            std::to_string(decoders.size()) + " decoders used for one stream"});
    }

    std::set<std::uint32_t> decoded;
    for (const StdDecodeEvent& d : st.decodes) decoded.insert(d.j);
    std::multiset<std::uint32_t> presented;
    for (const StdPresentEvent& p : st.presentations) presented.insert(p.source_j);
    if (st.decodes.size() != st.presentations.size() ||
        !std::equal(decoded.begin(), decoded.end(), presented.begin(), presented.end())) {
      violations.push_back({CdmRule::OnePresentationPerDecode, st.stream_id,
                            std::to_string(st.decodes.size()) + " decodes vs " +
                                std::to_string(st.presentations.size()) + " presentations"});
    }

    const auto source = std::find_if(streams.begin(), streams.end(),
                                     [&](const ToyStream& s) { return s.stream_id == st.stream_id; });
    if (source == streams.end()) continue;
    const auto units = std_access_units(*source);
    for (const StdPresentEvent& p : st.presentations) {
      if (p.source_j >= units.size() || units[p.source_j].pts != p.time) {
        violations.push_back({CdmRule::PresentationTimestamp, st.stream_id,
                              "P(" + std::to_string(p.k) + ") at " + std::to_string(p.time) +
                                  " does not match the pts of its access unit"});
      }
    }
  }

  for (const auto& [decoder, served] : streams_per_decoder) {
    if (served.size() > 1) {
      violations.push_back({CdmRule::OneDecoderPerStream, *served.begin(),
                            "decoder " + std::to_string(decoder) + " serves " + std::to_string(served.size()) +
                                " streams"});
    }
  }
  return violations;
}

std::string export_trace_lines(const StdTrace& trace) {
  struct Line {
    Ticks time;
    int kind;
    std::uint32_t stream;
    std::uint64_t index;
    std::string text;
  };
  std::vector<Line> lines;
  for (const StdArrivalEvent& a : trace.arrivals) {
    lines.push_back({a.time, 0, a.stream_id, 0,
                     "EVENT kind=arrival stream=" + std::to_string(a.stream_id) + " time=" + std::to_string(a.time) +
                         " bytes=" + std::to_string(a.bytes)});
  }
  for (const StdStreamTrace& st : trace.streams) {
    for (const StdDecodeEvent& d : st.decodes) {
      lines.push_back({d.time, 1, st.stream_id, d.j,
                       "EVENT kind=decode stream=" + std::to_string(st.stream_id) + " time=" +
                           std::to_string(d.time) + " j=" + std::to_string(d.j)});
    }
    for (const StdPresentEvent& p : st.presentations) {
      lines.push_back({p.time, 2, st.stream_id, p.k,
                       "EVENT kind=present stream=" + std::to_string(st.stream_id) + " time=" +
                           std::to_string(p.time) + " k=" + std::to_string(p.k)});
    }
  }
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return std::tie(a.time, a.kind, a.stream, a.index) < std::tie(b.time, b.kind, b.stream, b.index);
  });
  std::ostringstream out;
  for (const Line& l : lines) out << l.text << '\n';
  out << "VERDICT " << to_string(trace.verdict) << '\n';
  return out.str();
}

nlohmann::json std_report(const StdTrace& trace) {
  nlohmann::json report;
  report["kind"] = "std_trace";
  report["version"] = 1;
  report["verdict"] = std::string(to_string(trace.verdict));
  report["violation"] = nullptr;
  if (trace.violation_time) {
    report["violation"] = {{"time", *trace.violation_time}, {"stream", *trace.violation_stream}};
  }
  auto& streams = report["streams"] = nlohmann::json::array();
  for (const StdStreamTrace& st : trace.streams) {
    nlohmann::json s;
    s["stream_id"] = st.stream_id;
    s["bytes_in"] = st.bytes_in;
    s["bytes_out"] = st.bytes_out;
    s["final_occupancy"] = st.final_occupancy;
    s["peak_occupancy"] = st.peak_occupancy;
    s["decodes"] = nlohmann::json::array();
    for (const StdDecodeEvent& d : st.decodes) {
      s["decodes"].push_back({{"j", d.j}, {"time", d.time}, {"decoder", d.decoder}, {"bytes", d.bytes}});
    }
    s["presentations"] = nlohmann::json::array();
    for (const StdPresentEvent& p : st.presentations) {
      s["presentations"].push_back({{"k", p.k}, {"j", p.source_j}, {"time", p.time}});
    }
    streams.push_back(std::move(s));
  }
  auto& occupancy = report["occupancy"] = nlohmann::json::array();
  for (const OccupancySample& o : trace.occupancy) {
    occupancy.push_back({{"time", o.time}, {"stream", o.stream_id}, {"bytes", o.bytes}});
  }
  return report;
}

}  // namespace xrpipe
