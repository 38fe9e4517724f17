#include <sstream>

#include "amc/engine.hpp"
#include "doctest.h"

using namespace amc;

namespace {

ScenarioConfig quick(std::int64_t length = 3000) {
  ScenarioConfig c;
  c.channel.tx_antennas = 8;
  c.channel.rx_antennas = 2;
  c.channel.rank = 1;
  c.channel.speed_kmh = 30.0;
  c.agent.buffer_capacity = 300;
  c.agent.hidden = {8, 4};
  c.agent.fit.steps = 3;
  c.agent.fit.batch = 32;
  c.episode_length = length;
  c.label = "quick";
  return c;
}

McsTable shifted(double offset_db) {
  const auto base = McsTable::nr_default();
  std::vector<double> se(base.se_values().begin(), base.se_values().end());
  return McsTable(se, McsTable::linear_thresholds(base.size(), offset_db, 0.75), 2.0);
}

}  // namespace

TEST_CASE("derived stream seeds differ by label") {
  CHECK(derive_seed(1, "channel") != derive_seed(1, "transmission"));
  CHECK(derive_seed(1, "channel") != derive_seed(2, "channel"));
  CHECK(derive_seed(1, "channel") == derive_seed(1, "channel"));
}

TEST_CASE("bler zero: every agent ends at the top mcs") {
  ScenarioConfig c = quick(8000);
  c.mcs = shifted(-1000.0);
  c.agent.fit.steps = 10;
  const int k = c.mcs.size();
  for (AgentKind kind : {AgentKind::olla, AgentKind::odl}) {
    EpisodeOptions opt;
    opt.keep_trace = true;
    const auto m = run_episode(c, kind, 3, opt);
    CHECK(m.nacks == 0);
    for (std::size_t t = 6000; t < m.records.size(); ++t) {
      CHECK(m.records[t].mcs == k);
      CHECK(m.records[t].tput == c.mcs.se(k));
    }
  }
}

TEST_CASE("bler one: zero throughput and a falling offset") {
  ScenarioConfig c = quick(2000);
  c.mcs = shifted(1000.0);
  const auto m = run_episode(c, AgentKind::olla, 3);
  CHECK(m.tput_sum == 0.0);
  CHECK(m.bler == 1.0);
  CHECK(m.final_olla_offset < -100.0);
  CHECK(m.mcs_histogram.front() > 1900);
}

TEST_CASE("olla holds its bler target") {
  ScenarioConfig c = quick(50000);
  const auto m = run_episode(c, AgentKind::olla, 11);
  CHECK(std::abs(m.bler - 0.1) <= 0.02);
}

TEST_CASE("throughput accounting") {
  ScenarioConfig c = quick(2000);
  c.channel.rank = 2;
  EpisodeOptions opt;
  opt.keep_trace = true;
  const auto m = run_episode(c, AgentKind::odl, 5, opt);
  REQUIRE(m.records.size() == 2000);
  double sum = 0.0;
  std::int64_t nacks = 0, hist_total = 0;
  for (const auto& r : m.records) {
    CHECK(r.tput == (r.ack ? 2.0 * c.mcs.se(r.mcs) : 0.0));
    sum += r.tput;
    nacks += r.ack ? 0 : 1;
  }
  for (auto h : m.mcs_histogram) hist_total += h;
  CHECK(sum == doctest::Approx(m.tput_sum).epsilon(1e-12));
  CHECK(m.mean_tput == doctest::Approx(sum / 2000.0));
  CHECK(m.nacks == nacks);
  CHECK(hist_total == 2000);
}

TEST_CASE("episodes are deterministic and channels are paired across agents") {
  const ScenarioConfig c = quick(1500);
  const auto a = run_episode(c, AgentKind::odl, 8);
  const auto b = run_episode(c, AgentKind::odl, 8);
  CHECK(a == b);
  const auto q = run_episode(c, AgentKind::qlearning, 8);
  const auto o = run_episode(c, AgentKind::olla, 8);
  CHECK(q.channel_hash == a.channel_hash);
  CHECK(o.channel_hash == a.channel_hash);
  CHECK(run_episode(c, AgentKind::olla, 9).channel_hash != o.channel_hash);
}

TEST_CASE("olla against itself gains nothing") {
  const ScenarioConfig c = quick(1000);
  const std::vector<AgentKind> agents{AgentKind::olla};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto t = compare(c, agents, seeds, Execution::serial);
  REQUIRE(t.summary.size() == 1);
  CHECK(t.summary[0].mean_gain == 0.0);
  CHECK(t.summary[0].wins == 0);
  CHECK(t.rows.size() == 3);
}

TEST_CASE("compare adds the baseline and pairs seeds") {
  const ScenarioConfig c = quick(1000);
  const std::vector<AgentKind> agents{AgentKind::odl};
  const std::vector<std::uint64_t> seeds{4, 5};
  const auto t = compare(c, agents, seeds, Execution::serial);
  REQUIRE(t.summary.size() == 2);
  CHECK(t.summary[0].agent == AgentKind::olla);
  CHECK(t.rows.size() == 4);
  for (std::size_t i = 0; i < t.rows.size(); i += 2) {
    CHECK(t.rows[i].seed == t.rows[i + 1].seed);
    const double expect = (t.rows[i + 1].mean_tput - t.rows[i].mean_tput) / t.rows[i].mean_tput;
    CHECK(t.rows[i + 1].gain_vs_olla == doctest::Approx(expect));
  }
  CHECK(t.gain_of(AgentKind::odl).seeds == 2);
  CHECK_THROWS(t.gain_of(AgentKind::qlearning));
}

TEST_CASE("validation") {
  ScenarioConfig c = quick(300);
  CHECK_THROWS(run_episode(c, AgentKind::olla, 1));
  c = quick();
  c.subsample_rate = 0.0;
  CHECK_THROWS(c.validate());
  c = quick();
  c.subsample_rate.reset();
  CHECK(c.effective_subsample_rate() == doctest::Approx(0.2));
  c.subsample_rate = 0.5;
  CHECK(c.agent_config(AgentKind::qlearning).subsample_rate == 0.5);
  CHECK(c.agent_config(AgentKind::qlearning).kind == AgentKind::qlearning);
}

TEST_CASE("sweep grid shape") {
  ScenarioConfig c = quick(800);
  c.sweep.speeds_kmh = {3.0, 60.0};
  c.sweep.ranks = {1, 2};
  c.sweep.seeds = {1, 2};
  c.sweep.agents = {AgentKind::odl};
  const auto rows = sweep(c, Execution::serial);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].table.scenario == "v3_r1");
  CHECK(rows[3].table.scenario == "v60_r2");
  CHECK(rows[3].rank == 2);
  CHECK(rows[3].table.episodes.size() == 4);
  CHECK(grid_cell(c, 7.5, 3).label == "v7.5_r3");
}

TEST_CASE("csv schemas") {
  const ScenarioConfig c = quick(400);
  EpisodeOptions opt;
  opt.keep_trace = true;
  const auto m = run_episode(c, AgentKind::olla, 2, opt);
  std::ostringstream log;
  write_tti_log(log, m);
  std::istringstream lines(log.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "tti,agent,mcs,sinr_eff_db,ack,tput");
  std::getline(lines, line);
  CHECK(line.rfind("0,olla,", 0) == 0);
  int rows = 1;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 400);

  std::ostringstream summary;
  write_summary_header(summary);
  write_summary_row(summary, GainRow{"s", AgentKind::odl, 3, 2.5, 0.1, 0.05});
  write_summary_row(summary, GainRow{"s", AgentKind::odl, 3, 2.5, 0.1, 0.0}, false);
  CHECK(summary.str() ==
        "scenario,agent,seed,mean_tput,bler,gain_vs_olla\n"
        "s,odl,3,2.500000,0.100000,0.050000\n"
        "s,odl,3,2.500000,0.100000,\n");

  ScenarioConfig g = quick(400);
  g.sweep.speeds_kmh = {3.0};
  g.sweep.ranks = {1};
  g.sweep.seeds = {1};
  g.sweep.agents = {AgentKind::olla};
  const auto rows_g = sweep(g, Execution::serial);
  std::ostringstream gm;
  write_gain_matrix(gm, rows_g, g.sweep.agents);
  CHECK(gm.str() == "speed_kmh,rank,seeds,olla_mean_gain,olla_wins\n3,1,1,0.000000,0\n");
}

TEST_CASE("sample log rows follow the transmissions") {
  const ScenarioConfig c = quick(400);
  std::ostringstream log;
  EpisodeOptions opt;
  opt.sample_log = &log;
  run_episode(c, AgentKind::olla, 2, opt);
  std::istringstream lines(log.str());
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 400);
}

TEST_CASE("mbit conversion") {
  CHECK(to_mbps(1.0) == doctest::Approx(18.0));
}
