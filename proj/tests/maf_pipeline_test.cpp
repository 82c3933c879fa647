#include <gtest/gtest.h>

#include <random>

#include "criteria.hpp"
#include "xrpipe/maf_pipeline.hpp"

namespace xrpipe {
namespace {

using testing::component_scenario;

template <typename F>
std::optional<ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

TEST(MafPipeline, UngroupedSamplingMatchesTheBufferOracle) {
  std::mt19937_64 rng(81);
  for (int round = 0; round < 30; ++round) {
    const std::vector<std::string> media{"a", "b", "c"};
    std::vector<std::uint32_t> rates;
    for (int i = 0; i < 3; ++i) rates.push_back(1 + rng() % 5);
    Pipeline p(component_scenario(media, rates, Grouping::None, 0));
    const SyncReport rep = run(p);
    // 30 fps content sampled every 9000 ticks: three pictures per step.
    const auto oracle = testing::desync_oracle(rates, 10, 3, 8, 40);
    ASSERT_EQ(rep.steps.size(), 10u);
    for (std::size_t s = 0; s < 10; ++s) {
      for (std::size_t c = 0; c < 3; ++c) {
        const auto& got = rep.steps[s].pocs.at("object").at(media[c]);
        EXPECT_EQ(got ? static_cast<std::int64_t>(*got) : -1, oracle[s][c])
            << "rates " << rates[0] << rates[1] << rates[2] << " step " << s << " component " << c;
      }
    }
    EXPECT_EQ(rep.objects.at(0).max_poc_skew, testing::skew_from_steps(rep)["object"]);
  }
}

TEST(MafPipeline, GroupingBoundsSkew) {
  for (std::uint32_t tol : {0u, 1u, 2u}) {
    Pipeline p(component_scenario({"a", "b", "c"}, {3, 2, 2}, Grouping::PerObject, tol));
    const SyncReport rep = run(p);
    EXPECT_LE(rep.objects.at(0).max_poc_skew, tol);
    EXPECT_EQ(rep.objects.at(0).starved_reads, 0u);
    EXPECT_EQ(p.groups().size(), 1u);
  }
}

TEST(MafPipeline, StackedInstanceServesTheSameFramesAsSeparateOnes) {
  const std::vector<std::string> tiles{"tile0", "tile1", "tile2", "tile3"};
  auto scenario = [&] {
    Scenario s;
    s.scene = testing::component_scene(tiles, "panorama", 4);
    s.envelope = EngineEnvelope::from_samples_per_second(3840LL * 2160 * 60, 4, 4096, 2304);
    for (std::uint32_t i = 0; i < 4; ++i) {
      TestStreamSpec spec;
      spec.stream_id = 10 + i;
      spec.frames = 6;
      spec.width = 24;
      spec.height = 16;
      spec.payload_bytes = 5 + i;
      s.streams[tiles[i]] = make_test_stream(spec);
    }
    s.steps = 6;
    s.presentation_tick_per_step = 3000;
    return s;
  };

  using Key = std::pair<std::uint32_t, std::string>;
  std::map<Key, DecodedPicture> separate, stacked;
  Pipeline four(scenario());
  EXPECT_EQ(four.instances().size(), 4u);
  run(four, RunOptions{1, [&](std::uint32_t s, const std::string&, const std::string& c, const Frame& f) {
                         separate[{s, c}] = decode_picture_frame(f.data);
                       }});

  Scenario merged = scenario();
  merged.formatting.push_back(FormattingStep{FormattingStep::Kind::Stack, tiles, "panorama", 2, 2, {}, {}, 0});
  Pipeline one(merged);
  ASSERT_EQ(one.instances().size(), 1u);
  run(one, RunOptions{1, [&](std::uint32_t s, const std::string&, const std::string& c, const Frame& f) {
                        stacked[{s, c}] = decode_picture_frame(f.data);
                      }});

  ASSERT_EQ(separate.size(), 24u);
  ASSERT_EQ(stacked.size(), 24u);
  for (const auto& [key, sep] : separate) {
    const DecodedPicture& big = stacked.at(key);
    const std::size_t slot = std::stoul(key.second.substr(4));
    const std::uint32_t x0 = (slot % 2) * 24, y0 = (slot / 2) * 16;
    EXPECT_EQ(big.poc, sep.poc);
    EXPECT_EQ(big.pts, sep.pts);
    ASSERT_EQ(big.width, 48u);
    for (std::uint32_t y = 0; y < sep.height; ++y) {
      for (std::uint32_t x = 0; x < sep.width; ++x) {
        ASSERT_EQ(big.pixels[(y0 + y) * big.width + x0 + x], sep.pixels[y * sep.width + x]) << key.second;
      }
    }
  }
}

TEST(MafPipeline, ThreadedRunIsIdentical) {
  for (const char* file : {"desync_none.json", "desync_per_object.json", "desync_with_updates.json"}) {
    const Scenario sc = load_scenario(testing::scenario_dir() / file);
    Pipeline a(sc), b(sc);
    const SyncReport ra = sc.updates.empty() ? run(a) : run_with_updates(a, sc.updates);
    const SyncReport rb = sc.updates.empty() ? run(b, {2, {}}) : run_with_updates(b, sc.updates, {2, {}});
    EXPECT_EQ(report_to_json(ra), report_to_json(rb)) << file;
  }
}

TEST(MafPipeline, UpdatesAreAdmittedAtomically) {
  const Scenario sc = load_scenario(testing::scenario_dir() / "desync_with_updates.json");
  Pipeline p(sc);
  const SyncReport rep = run_with_updates(p, sc.updates);
  ASSERT_EQ(rep.updates.size(), 2u);
  // Adding a fourth component does not fit three instance slots.
  EXPECT_FALSE(rep.updates[0].applied);
  EXPECT_EQ(rep.updates[0].error, ErrorCode::AdmissionFailed);
  EXPECT_TRUE(rep.updates[1].applied);
  EXPECT_EQ(p.instances().size(), 2u);
  EXPECT_EQ(p.instance_for_media("occupancy"), nullptr);
  EXPECT_EQ(p.retired().size(), 1u);
  EXPECT_EQ(p.document()["extensions"]["MPEG_media"]["media"].size(), 2u);

  // Capability is conserved at every step, and what remains admitted is
  // exactly the two surviving 64x64@30 instances.
  for (const PresentationStep& s : rep.steps) {
    EXPECT_EQ(s.admitted_samples_per_tick + s.available_samples_per_tick, sc.envelope.max_samples_per_tick);
  }
  const Rational one(64 * 64 * 30, 90000);
  EXPECT_EQ(rep.steps.front().admitted_samples_per_tick, 3 * one);
  EXPECT_EQ(rep.steps.back().admitted_samples_per_tick, 2 * one);
  EXPECT_EQ(p.engine().query_current_aggregate_capabilities(CodecProfile::ToyBase).available_instances, 1u);
}

TEST(MafPipeline, HaltPolicyStopsLaterUpdates) {
  const Scenario sc = load_scenario(testing::scenario_dir() / "desync_with_updates.json");
  Pipeline p(sc);
  RunOptions opts;
  opts.on_update_failure = UpdateFailurePolicy::Halt;
  const SyncReport rep = run_with_updates(p, sc.updates, opts);
  ASSERT_EQ(rep.updates.size(), 1u);
  EXPECT_EQ(rep.updates[0].error, ErrorCode::AdmissionFailed);
  EXPECT_EQ(p.instances().size(), 3u);
  EXPECT_TRUE(p.retired().empty());
}

TEST(MafPipeline, RandomUpdateSequencesConserveCapability) {
  std::mt19937_64 rng(82);
  const std::vector<std::string> media{"m0", "m1", "m2", "m3"};
  for (int round = 0; round < 20; ++round) {
    Scenario sc = component_scenario({"m0", "m1"}, {1, 2}, Grouping::PerObject, 1);
    sc.envelope.max_instances = 3;
    for (std::size_t i = 2; i < 4; ++i) {
      TestStreamSpec spec;
      spec.stream_id = static_cast<std::uint32_t>(i);
      spec.frames = 40;
      sc.streams[media[i]] = make_test_stream(spec);
    }
    Pipeline p(sc);
    Json doc = p.document();
    std::vector<PatchTransaction> txns;
    for (int k = 0; k < 6; ++k) {
      // Toggle the name of a random media entry: renaming to a media with a
      // stream swaps instances, to an unknown one fails with MissingMedia.
      PatchTransaction t;
      t.activation_time = 9000 * (k + 1);
      const std::size_t which = rng() % 2;
      const std::string name = rng() % 5 == 0 ? "nowhere" : media[rng() % 4];
      t.operations.push_back(
          {PatchOp::Replace, "/extensions/MPEG_media/media/" + std::to_string(which) + "/name", std::nullopt, Json(name)});
      txns.push_back(t);
    }
    const SyncReport rep = run_with_updates(p, txns);
    for (const PresentationStep& s : rep.steps) {
      EXPECT_EQ(s.admitted_samples_per_tick + s.available_samples_per_tick, sc.envelope.max_samples_per_tick);
      EXPECT_GE(s.available_samples_per_tick, Rational(0));
    }
    // Active instances are exactly those serving the final document's media.
    std::set<std::string> active;
    for (const auto& [name, inst] : p.instances()) active.insert(inst.media.begin(), inst.media.end());
    std::set<std::string> wanted;
    for (const Json& m : p.document()["extensions"]["MPEG_media"]["media"]) wanted.insert(m["name"].get<std::string>());
    EXPECT_EQ(active, wanted);
    EXPECT_EQ(p.engine().instance_ids().size(), p.instances().size());
    const Rational one(64 * 64 * 30, 90000);
    EXPECT_EQ(p.engine().admitted_total(), static_cast<std::int64_t>(p.instances().size()) * one);
  }
}

TEST(MafPipeline, BuildErrors) {
  Scenario sc = component_scenario({"a", "b"}, {1, 1}, Grouping::None, 0);
  Scenario missing = sc;
  missing.streams.erase("b");
  EXPECT_EQ(error_of([&] { Pipeline p(missing); }), ErrorCode::MissingMedia);
  Scenario tight = sc;
  tight.envelope.max_instances = 1;
  EXPECT_EQ(error_of([&] { Pipeline p(tight); }), ErrorCode::AdmissionFailed);
  EXPECT_EQ(error_of([] { parse_scenario(Json::parse(R"({"streams": {}})"), "."); }), ErrorCode::InvalidScenario);
  EXPECT_EQ(error_of([] { parse_rational(Json("1/0")); }), ErrorCode::InvalidScenario);
  EXPECT_EQ(parse_rational(Json("30000/1001")), Rational(30000, 1001));
  EXPECT_EQ(parse_rational(Json(60)), Rational(60));
}

TEST(MafPipeline, TextReportLayout) {
  Pipeline p(load_scenario(testing::scenario_dir() / "desync_none.json"));
  const std::string text = emit_report(run(p), ReportFormat::Text);
  EXPECT_EQ(text.rfind("grouping=NONE skew_tolerance_pocs=0 steps=10 tick_per_step=9000\n", 0), 0u);
  EXPECT_NE(text.find("object pointcloud components=texture,geometry,occupancy max_poc_skew=8"), std::string::npos);
  EXPECT_NE(text.find("step 9 t=81000 pointcloud["), std::string::npos);
}

}  // namespace
}  // namespace xrpipe
