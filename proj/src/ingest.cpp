#include "delaychain/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <tuple>

#include "csv.hpp"
#include "delaychain/error.hpp"

namespace delaychain {

namespace chr = std::chrono;

const char* to_string(Activity activity) {
  switch (activity) {
    case Activity::V: return "V";
    case Activity::D: return "D";
    case Activity::A: return "A";
    case Activity::KV: return "KV";
    case Activity::KA: return "KA";
  }
  return "V";
}

Activity activity_from_string(std::string_view text) {
  if (text == "V") return Activity::V;
  if (text == "D") return Activity::D;
  if (text == "A") return Activity::A;
  if (text == "KV") return Activity::KV;
  if (text == "KA") return Activity::KA;
  throw ParseError("unknown activity '" + std::string(text) + "'");
}

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len, std::string_view what) {
  if (pos + len > text.size()) throw ParseError("truncated " + std::string(what));
  const auto part = text.substr(pos, len);
  if (!std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ParseError("invalid " + std::string(what) + " in '" + std::string(text) + "'");
  }
  return parse_int(part, what);
}

}  // namespace

chr::year_month_day parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw ParseError("invalid date '" + std::string(text) + "'");
  }
  const chr::year_month_day ymd{chr::year{parse_fixed(text, 0, 4, "year")},
                                chr::month{static_cast<unsigned>(parse_fixed(text, 5, 2, "month"))},
                                chr::day{static_cast<unsigned>(parse_fixed(text, 8, 2, "day"))}};
  if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
  return ymd;
}

std::string format_date(chr::year_month_day date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  if (text.size() != 19 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':') {
    throw ParseError("invalid timestamp '" + std::string(text) + "'");
  }
  const auto ymd = parse_date(text.substr(0, 10));
  const int h = parse_fixed(text, 11, 2, "hour");
  const int m = parse_fixed(text, 14, 2, "minute");
  const int s = parse_fixed(text, 17, 2, "second");
  if (h > 23 || m > 59 || s > 59) throw ParseError("invalid time of day in '" + std::string(text) + "'");
  return chr::sys_days{ymd} + chr::hours{h} + chr::minutes{m} + chr::seconds{s};
}

std::string format_timestamp(Timestamp ts) {
  const auto day = chr::floor<chr::days>(ts);
  const chr::hh_mm_ss hms{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d", format_date(chr::year_month_day{day}).c_str(),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

int parse_clock_seconds(std::string_view text) {
  const auto first = text.find(':');
  const auto second = text.find(':', first == std::string_view::npos ? 0 : first + 1);
  if (first == std::string_view::npos || second == std::string_view::npos || second - first != 3 ||
      text.size() - second != 3) {
    throw ParseError("invalid clock time '" + std::string(text) + "'");
  }
  const int h = parse_int(text.substr(0, first), "hour");
  const int m = parse_fixed(text, first + 1, 2, "minute");
  const int s = parse_fixed(text, second + 1, 2, "second");
  if (h < 0 || m > 59 || s > 59) throw ParseError("invalid clock time '" + std::string(text) + "'");
  return h * 3600 + m * 60 + s;
}

std::string format_clock_seconds(int seconds) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", seconds / 3600, (seconds / 60) % 60, seconds % 60);
  return buf;
}

int JourneyTemplate::find(const StationKey& key) const {
  for (std::size_t k = 0; k < stops.size(); ++k) {
    if (stops[k].key == key) return static_cast<int>(k) + 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// CSV parsing

namespace {

struct ColumnMap {
  std::vector<std::string> names;
  std::vector<int> index;  // position of each requested column, -1 if absent
  std::size_t width = 0;
};

ColumnMap read_header(std::string_view line, const std::vector<std::string>& required,
                      const std::vector<std::string>& optional) {
  const auto fields = csv::split(line);
  ColumnMap map;
  map.width = fields.size();
  auto locate = [&](const std::string& name) {
    const auto it = std::find(fields.begin(), fields.end(), name);
    return it == fields.end() ? -1 : static_cast<int>(it - fields.begin());
  };
  for (const auto& name : required) {
    const int at = locate(name);
    if (at < 0) throw ParseError("header lacks column '" + name + "'");
    map.names.push_back(name);
    map.index.push_back(at);
  }
  for (const auto& name : optional) {
    map.names.push_back(name);
    map.index.push_back(locate(name));
  }
  return map;
}

// Reads the first non-blank line; returns nullopt on an empty stream.
std::optional<std::string> first_line(std::istream& input, std::size_t& line_no) {
  std::string line;
  while (std::getline(input, line)) {
    ++line_no;
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!csv::trim(line).empty()) return line;
  }
  return std::nullopt;
}

}  // namespace

EventParseResult parse_events(std::istream& input) {
  EventParseResult result;
  std::size_t line_no = 0;
  const auto header = first_line(input, line_no);
  if (!header) {
    result.warnings.push_back("realization input is empty");
    return result;
  }
  const ColumnMap cols = read_header(
      *header, {"train_id", "date", "station_code", "activity", "planned_time", "realized_time"}, {});

  std::string line;
  while (std::getline(input, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    const std::string raw(csv::trim(line));
    if (fields.size() != cols.width) {
      result.rejects.push_back({line_no, raw, "expected " + std::to_string(cols.width) + " fields"});
      continue;
    }
    auto field = [&](std::size_t k) -> const std::string& {
      return fields[static_cast<std::size_t>(cols.index[k])];
    };
    RealizationEvent ev;
    ev.train_id = field(0);
    ev.date = field(1);
    ev.station_code = field(2);
    if (ev.train_id.empty() || ev.station_code.empty()) {
      result.rejects.push_back({line_no, raw, "missing train or station"});
      continue;
    }
    try {
      ev.activity = activity_from_string(field(3));
    } catch (const ParseError&) {
      result.rejects.push_back({line_no, raw, "unknown activity"});
      continue;
    }
    try {
      parse_date(ev.date);
      ev.planned_time = parse_timestamp(field(4));
      ev.realized_time = parse_timestamp(field(5));
    } catch (const ParseError& e) {
      result.rejects.push_back({line_no, raw, std::string("unparseable timestamp: ") + e.what()});
      continue;
    }
    result.events.push_back(std::move(ev));
  }
  if (result.events.empty() && result.rejects.empty()) {
    result.warnings.push_back("realization input has no data rows");
  }
  return result;
}

TimetableParseResult parse_timetable(std::istream& input) {
  TimetableParseResult result;
  std::size_t line_no = 0;
  const auto header = first_line(input, line_no);
  if (!header) {
    result.warnings.push_back("timetable input is empty");
    return result;
  }
  const ColumnMap cols = read_header(*header, {"train_id", "station_code", "activity", "planned_time", "sequence"},
                                     {"service_class"});

  struct Row {
    int sequence;
    TemplateStop stop;
    std::size_t line;
    std::string raw;
  };
  std::map<std::pair<std::string, std::string>, std::vector<Row>> groups;

  std::string line;
  while (std::getline(input, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    std::string raw(csv::trim(line));
    if (fields.size() != cols.width) {
      result.rejects.push_back({line_no, raw, "expected " + std::to_string(cols.width) + " fields"});
      continue;
    }
    auto field = [&](std::size_t k) -> const std::string& {
      return fields[static_cast<std::size_t>(cols.index[k])];
    };
    Row row{};
    try {
      row.stop.key = {field(1), activity_from_string(field(2))};
    } catch (const ParseError&) {
      result.rejects.push_back({line_no, raw, "unknown activity"});
      continue;
    }
    try {
      row.stop.planned_seconds = parse_clock_seconds(field(3));
      row.sequence = parse_int(field(4), "sequence");
    } catch (const ParseError& e) {
      result.rejects.push_back({line_no, raw, e.what()});
      continue;
    }
    if (field(0).empty() || row.stop.key.station_code.empty()) {
      result.rejects.push_back({line_no, raw, "missing train or station"});
      continue;
    }
    std::string service = "all";
    if (cols.index[5] >= 0 && !field(5).empty()) service = field(5);
    row.line = line_no;
    row.raw = std::move(raw);
    groups[{field(0), service}].push_back(std::move(row));
  }

  for (auto& [key, rows] : groups) {
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.sequence < b.sequence; });
    JourneyTemplate journey{key.first, key.second, {}};
    std::set<StationKey> seen;
    int last_sequence = 0;
    for (const auto& row : rows) {
      if (!journey.stops.empty() && row.sequence == last_sequence) {
        result.rejects.push_back({row.line, row.raw, "duplicate sequence"});
        continue;
      }
      if (seen.contains(row.stop.key)) {
        result.rejects.push_back({row.line, row.raw, "duplicate station key"});
        continue;
      }
      if (!journey.stops.empty() && row.stop.planned_seconds < journey.stops.back().planned_seconds) {
        result.rejects.push_back({row.line, row.raw, "planned time decreases"});
        continue;
      }
      seen.insert(row.stop.key);
      last_sequence = row.sequence;
      journey.stops.push_back(row.stop);
    }
    if (!journey.stops.empty()) result.templates.push_back(std::move(journey));
  }
  return result;
}

void write_rejects_csv(std::ostream& out, std::string_view header, const std::vector<Reject>& rejects) {
  out << header << ",reason\n";
  for (const auto& r : rejects) out << r.row << ',' << csv::escape(r.reason) << '\n';
}

// ---------------------------------------------------------------------------

int compute_delay_minutes(Timestamp planned, Timestamp realized) {
  const long long diff = (realized - planned).count();
  const long long magnitude = (diff < 0 ? -diff : diff);
  const long long rounded = (magnitude + 30) / 60;
  return static_cast<int>(diff < 0 ? -rounded : rounded);
}

const char* to_string(ClipMode mode) { return mode == ClipMode::saturate ? "saturate" : "drop"; }

ClipMode clip_mode_from_string(const std::string& text) {
  if (text == "saturate") return ClipMode::saturate;
  if (text == "drop") return ClipMode::drop;
  throw ParseError("unknown clip mode '" + text + "'");
}

ServicePartition::ServicePartition() { classes_.fill("all"); }

ServicePartition ServicePartition::parse(std::string_view spec) {
  static constexpr std::array<std::string_view, 7> kNames = {"sun", "mon", "tue", "wed", "thu", "fri", "sat"};
  ServicePartition partition;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto end = spec.find(';', pos);
    if (end == std::string_view::npos) end = spec.size();
    const auto group = csv::trim(spec.substr(pos, end - pos));
    pos = end + 1;
    if (group.empty()) continue;
    const auto eq = group.find('=');
    if (eq == std::string_view::npos) throw ParseError("service class group lacks '=': " + std::string(group));
    const std::string name(csv::trim(group.substr(eq + 1)));
    if (name.empty()) throw ParseError("empty service class name");
    for (const auto& day : csv::split(group.substr(0, eq))) {
      const auto it = std::find(kNames.begin(), kNames.end(), day);
      if (it == kNames.end()) throw ParseError("unknown weekday '" + day + "'");
      partition.classes_[static_cast<std::size_t>(it - kNames.begin())] = name;
    }
  }
  return partition;
}

const std::string& ServicePartition::class_of(chr::weekday day) const { return classes_[day.c_encoding()]; }

const std::string& ServicePartition::class_of_date(std::string_view date) const {
  return class_of(chr::weekday{chr::sys_days{parse_date(date)}});
}

AssemblyResult assemble_series(const std::vector<RealizationEvent>& events, const JourneyTemplate& journey,
                               const StateSpace& space, ClipMode clip) {
  AssemblyResult result;
  // date -> per-template-position event
  std::map<std::string, std::vector<const RealizationEvent*>> by_date;
  auto describe = [](const RealizationEvent& ev) {
    return ev.train_id + "," + ev.date + "," + ev.station_code + "," + to_string(ev.activity) + "," +
           format_timestamp(ev.planned_time) + "," + format_timestamp(ev.realized_time);
  };

  std::set<std::string> all_dates;
  for (const auto& ev : events) {
    if (ev.train_id != journey.train_id) {
      result.rejects.push_back({0, describe(ev), "event belongs to another train"});
      continue;
    }
    all_dates.insert(ev.date);
    const int position = journey.find({ev.station_code, ev.activity});
    if (position == 0) {
      result.rejects.push_back({0, describe(ev), "station key not in template"});
      continue;
    }
    auto& slots = by_date[ev.date];
    slots.resize(journey.length(), nullptr);
    auto& slot = slots[static_cast<std::size_t>(position - 1)];
    if (slot != nullptr) {
      result.rejects.push_back({0, describe(ev), "duplicate event for station key"});
      continue;
    }
    slot = &ev;
  }

  for (const auto& date : all_dates) {
    DelaySeries series;
    series.train_id = journey.train_id;
    series.service_class = journey.service_class;
    series.date = date;
    const auto it = by_date.find(date);
    if (it != by_date.end()) {
      for (const RealizationEvent* ev : it->second) {
        if (ev == nullptr) break;
        const int delay = compute_delay_minutes(ev->planned_time, ev->realized_time);
        if (!space.contains(delay)) {
          if (clip == ClipMode::drop) break;
          ++series.clip_count;
        }
        series.delays.push_back(space.clip(delay));
      }
    }
    if (series.delays.empty()) {
      result.rejected_dates.push_back(journey.train_id + "/" + date);
    } else {
      result.series.push_back(std::move(series));
    }
  }
  return result;
}

AssemblyResult assemble_all(const std::vector<RealizationEvent>& events,
                            const std::vector<JourneyTemplate>& templates, const ServicePartition& partition,
                            const StateSpace& space, ClipMode clip) {
  std::map<std::pair<std::string, std::string>, const JourneyTemplate*> lookup;
  for (const auto& t : templates) lookup[{t.train_id, t.service_class}] = &t;

  std::map<std::pair<std::string, std::string>, std::vector<RealizationEvent>> groups;
  std::set<std::string> orphan_dates;
  AssemblyResult result;
  for (const auto& ev : events) {
    const std::string& service = partition.class_of_date(ev.date);
    if (!lookup.contains({ev.train_id, service})) {
      result.rejects.push_back({0,
                                ev.train_id + "," + ev.date + "," + ev.station_code + "," +
                                    to_string(ev.activity) + "," + format_timestamp(ev.planned_time) + "," +
                                    format_timestamp(ev.realized_time),
                                "no timetable for train " + ev.train_id + " (" + service + ")"});
      orphan_dates.insert(ev.train_id + "/" + ev.date);
      continue;
    }
    groups[{ev.train_id, service}].push_back(ev);
  }

  std::set<std::string> assembled_dates;
  for (const auto& [key, group] : groups) {
    AssemblyResult part = assemble_series(group, *lookup.at(key), space, clip);
    for (auto& s : part.series) {
      assembled_dates.insert(s.train_id + "/" + s.date);
      result.series.push_back(std::move(s));
    }
    for (auto& r : part.rejects) result.rejects.push_back(std::move(r));
    for (auto& d : part.rejected_dates) {
      assembled_dates.insert(d);
      result.rejected_dates.push_back(std::move(d));
    }
  }
  for (const auto& d : orphan_dates) {
    if (!assembled_dates.contains(d)) result.rejected_dates.push_back(d);
  }
  std::sort(result.series.begin(), result.series.end(), [](const DelaySeries& a, const DelaySeries& b) {
    return std::tie(a.train_id, a.date) < std::tie(b.train_id, b.date);
  });
  std::sort(result.rejected_dates.begin(), result.rejected_dates.end());
  return result;
}

int select_target_station(const JourneyTemplate& journey, int current_index, chr::seconds horizon) {
  const int length = static_cast<int>(journey.length());
  if (current_index < 1 || current_index > length) {
    throw DomainError("station index " + std::to_string(current_index) + " outside template");
  }
  if (horizon.count() <= 0) throw DomainError("forecast horizon must be positive");
  if (current_index == length) throw NoTargetError("current station is the last one; nothing to forecast");
  const long long goal = journey.stops[static_cast<std::size_t>(current_index - 1)].planned_seconds + horizon.count();
  for (int t = current_index + 1; t <= length; ++t) {
    if (journey.stops[static_cast<std::size_t>(t - 1)].planned_seconds >= goal) return t;
  }
  return length;
}

}  // namespace delaychain
