#include "tls_assist/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace tls_assist {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json means_to_json(const MetricMeans& m) {
  return {{"routes", m.routes},
          {"ds", m.ds},
          {"rc", m.rc},
          {"is", m.is},
          {"red_light", m.red_light},
          {"stop_sign", m.stop_sign},
          {"speeding", m.speeding},
          {"route_deviation", m.route_deviation},
          {"timeout", m.timeout}};
}

MetricMeans means_from_json(const ordered_json& j) {
  MetricMeans m;
  m.routes = j.at("routes").get<std::size_t>();
  m.ds = j.at("ds").get<double>();
  m.rc = j.at("rc").get<double>();
  m.is = j.at("is").get<double>();
  m.red_light = j.at("red_light").get<double>();
  m.stop_sign = j.at("stop_sign").get<double>();
  m.speeding = j.at("speeding").get<double>();
  m.route_deviation = j.at("route_deviation").get<double>();
  m.timeout = j.at("timeout").get<double>();
  return m;
}

ordered_json run_to_json(const RouteRun& r) {
  const InfractionLedger& l = r.report.ledger;
  return {{"track", to_string(r.track)},
          {"route", r.route},
          {"repetition", r.repetition},
          {"route_length", r.route_length},
          {"rc", r.report.rc},
          {"is", r.report.is},
          {"ds", r.report.ds},
          {"termination", to_string(r.report.termination)},
          {"ticks", r.report.ticks},
          {"ledger",
           {{"red_light", l.red_light},
            {"stop_sign", l.stop_sign},
            {"speeding", l.speeding},
            {"route_deviation", l.route_deviation},
            {"timeout", l.timeout}}}};
}

Track track_from(const ordered_json& j) {
  auto t = parse_track(j.get<std::string>());
  if (!t) throw ReportError("unknown track '" + j.get<std::string>() + "'");
  return *t;
}

RouteRun run_from_json(const ordered_json& j) {
  RouteRun r;
  r.track = track_from(j.at("track"));
  r.route = j.at("route").get<std::size_t>();
  r.repetition = j.at("repetition").get<std::size_t>();
  r.route_length = j.at("route_length").get<double>();
  r.report.rc = j.at("rc").get<double>();
  r.report.is = j.at("is").get<double>();
  r.report.ds = j.at("ds").get<double>();
  r.report.ticks = j.at("ticks").get<std::size_t>();
  const auto term = j.at("termination").get<std::string>();
  if (term == "completed") {
    r.report.termination = Termination::completed;
  } else if (term == "timeout") {
    r.report.termination = Termination::timeout;
  } else if (term == "route_deviation") {
    r.report.termination = Termination::route_deviation;
  } else {
    throw ReportError("unknown termination '" + term + "'");
  }
  const auto& l = j.at("ledger");
  r.report.ledger.red_light = l.at("red_light").get<int>();
  r.report.ledger.stop_sign = l.at("stop_sign").get<int>();
  r.report.ledger.speeding = l.at("speeding").get<int>();
  r.report.ledger.route_deviation = l.at("route_deviation").get<int>();
  r.report.ledger.timeout = l.at("timeout").get<int>();
  return r;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

// Renders rows of cells with the first column left-aligned and the rest right-aligned.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += c == 0 ? pad_right(row[c], widths[c]) : pad_left(row[c], widths[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

std::string track_title(Track t) {
  switch (t) {
    case Track::tiny: return "Tiny";
    case Track::short_route: return "Short";
    case Track::long_route: return "Long";
  }
  return "";
}

}  // namespace

ordered_json report_to_json(const BenchmarkReport& report, const ordered_json& manifest) {
  ordered_json tracks = ordered_json::array();
  for (Track t : report.plan.tracks) tracks.push_back(to_string(t));
  ordered_json doc;
  doc["manifest"] = manifest;
  doc["plan"] = {{"tracks", tracks},
                 {"routes_per_track", report.plan.routes_per_track},
                 {"repetitions", report.plan.repetitions},
                 {"master_seed", report.plan.master_seed}};
  ordered_json rows = ordered_json::array();
  for (const auto& row : report.rows) {
    ordered_json per_track = ordered_json::object();
    for (const auto& [t, m] : row.per_track) per_track[std::string(to_string(t))] = means_to_json(m);
    ordered_json runs = ordered_json::array();
    for (const auto& r : row.runs) runs.push_back(run_to_json(r));
    rows.push_back({{"label", row.label},
                    {"enable_tlr", row.enable_tlr},
                    {"enable_tsr", row.enable_tsr},
                    {"enable_rp", row.enable_rp},
                    {"enable_sv", row.enable_sv},
                    {"per_track", per_track},
                    {"overall", means_to_json(row.overall)},
                    {"runs", runs}});
  }
  doc["rows"] = std::move(rows);
  return doc;
}

BenchmarkReport report_from_json(const ordered_json& doc) {
  try {
    BenchmarkReport report;
    const auto& plan = doc.at("plan");
    report.plan.tracks.clear();
    for (const auto& t : plan.at("tracks")) report.plan.tracks.push_back(track_from(t));
    report.plan.routes_per_track = plan.at("routes_per_track").get<std::size_t>();
    report.plan.repetitions = plan.at("repetitions").get<std::size_t>();
    report.plan.master_seed = plan.at("master_seed").get<std::uint64_t>();
    for (const auto& r : doc.at("rows")) {
      VariantReport row;
      row.label = r.at("label").get<std::string>();
      row.enable_tlr = r.at("enable_tlr").get<bool>();
      row.enable_tsr = r.at("enable_tsr").get<bool>();
      row.enable_rp = r.at("enable_rp").get<bool>();
      row.enable_sv = r.at("enable_sv").get<bool>();
      for (auto it = r.at("per_track").begin(); it != r.at("per_track").end(); ++it) {
        auto t = parse_track(it.key());
        if (!t) throw ReportError("unknown track '" + it.key() + "'");
        row.per_track.emplace_back(*t, means_from_json(it.value()));
      }
      row.overall = means_from_json(r.at("overall"));
      for (const auto& run : r.at("runs")) row.runs.push_back(run_from_json(run));
      report.rows.push_back(std::move(row));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
}

std::string format_score_table(const BenchmarkReport& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head1{""};
  std::vector<std::string> head2{"Variant"};
  for (Track t : report.plan.tracks) {
    head1.insert(head1.end(), {track_title(t), "", ""});
    head2.insert(head2.end(), {"DS", "RC", "IS"});
  }
  head1.insert(head1.end(), {"Overall", "", ""});
  head2.insert(head2.end(), {"DS", "RC", "IS"});
  rows.push_back(head1);
  rows.push_back(head2);
  for (const auto& row : report.rows) {
    std::vector<std::string> cells{row.label};
    auto add = [&](const MetricMeans& m) {
      cells.insert(cells.end(), {fixed(m.ds, 2), fixed(m.rc, 2), fixed(m.is, 2)});
    };
    for (const auto& [t, m] : row.per_track) add(m);
    add(row.overall);
    rows.push_back(std::move(cells));
  }
  return render(rows);
}

std::string format_infraction_table(const BenchmarkReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Variant", "Red Light", "Stop Sign", "Speeding", "Route Dev.", "Timeouts"});
  const MetricMeans* base = report.rows.empty() ? nullptr : &report.rows.front().overall;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const MetricMeans& m = report.rows[i].overall;
    auto cell = [&](double before, double after) {
      std::string s = fixed(after, 2);
      if (i > 0) s += " " + format_percent_change(before, after);
      return s;
    };
    rows.push_back({report.rows[i].label, cell(base->red_light, m.red_light),
                    cell(base->stop_sign, m.stop_sign), cell(base->speeding, m.speeding),
                    cell(base->route_deviation, m.route_deviation),
                    cell(base->timeout, m.timeout)});
  }
  return render(rows);
}

std::string format_compare(const std::vector<RowDelta>& deltas) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Variant", "Track", "Metric", "Before", "After", "Delta", "Change"});
  for (const auto& d : deltas) {
    const std::string track = d.track ? track_title(*d.track) : "Overall";
    for (const auto& m : d.metrics) {
      const std::string change = format_percent_change(m.before, m.after);
      rows.push_back({d.label, track, m.metric, fixed(m.before, 2), fixed(m.after, 2),
                      (m.absolute >= 0 ? "+" : "") + fixed(m.absolute, 2), change});
    }
  }
  return render(rows);
}

}  // namespace tls_assist
