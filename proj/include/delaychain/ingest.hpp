#pragma once

#include <array>
#include <chrono>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "delaychain/core.hpp"

namespace delaychain {

using Timestamp = std::chrono::sys_seconds;

// V departure, D passage, A arrival, KV/KA departure/arrival at a short stop.
enum class Activity { V, D, A, KV, KA };

const char* to_string(Activity activity);
// Throws ParseError on anything outside {V, D, A, KV, KA}.
Activity activity_from_string(std::string_view text);

// "YYYY-MM-DDTHH:MM:SS" (a space separator is accepted as well).
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);
std::chrono::year_month_day parse_date(std::string_view text);
std::string format_date(std::chrono::year_month_day date);
// "HH:MM:SS" offset from the start of the service day; hours may exceed 23.
int parse_clock_seconds(std::string_view text);
std::string format_clock_seconds(int seconds);

struct RealizationEvent {
  std::string train_id;
  std::string date;
  std::string station_code;
  Activity activity = Activity::V;
  Timestamp planned_time{};
  Timestamp realized_time{};

  std::chrono::seconds lateness() const { return realized_time - planned_time; }
};

// Arrival and departure at one physical station are different keys.
struct StationKey {
  std::string station_code;
  Activity activity = Activity::V;

  friend auto operator<=>(const StationKey&, const StationKey&) = default;
};

struct TemplateStop {
  StationKey key;
  int planned_seconds = 0;  // offset from the service day start
};

struct JourneyTemplate {
  std::string train_id;
  std::string service_class = "all";
  std::vector<TemplateStop> stops;  // planned times non-decreasing

  std::size_t length() const { return stops.size(); }
  // 1-based index of the key, 0 when absent.
  int find(const StationKey& key) const;
};

// A rejected input row together with the reason it was rejected.
struct Reject {
  std::size_t line = 0;
  std::string row;
  std::string reason;
};

inline constexpr std::string_view kRealizationHeader =
    "train_id,date,station_code,activity,planned_time,realized_time";
inline constexpr std::string_view kTimetableHeader = "train_id,station_code,activity,planned_time,sequence";

struct EventParseResult {
  std::vector<RealizationEvent> events;
  std::vector<Reject> rejects;
  std::vector<std::string> warnings;
};

// Parses the realization CSV. Malformed rows are collected as rejects;
// a missing or wrong header throws ParseError.
EventParseResult parse_events(std::istream& input);

struct TimetableParseResult {
  std::vector<JourneyTemplate> templates;  // sorted by (train_id, service_class)
  std::vector<Reject> rejects;
  std::vector<std::string> warnings;
};

// Parses the timetable CSV. An optional trailing `service_class` column keys
// templates per weekday class.
TimetableParseResult parse_timetable(std::istream& input);

// Rejects as CSV: the original header plus a `reason` column.
void write_rejects_csv(std::ostream& out, std::string_view header, const std::vector<Reject>& rejects);

// (realized - planned) seconds / 60, rounded to nearest with ties away from zero.
int compute_delay_minutes(Timestamp planned, Timestamp realized);

// What to do with a delay outside [-N, N].
enum class ClipMode { saturate, drop };

const char* to_string(ClipMode mode);
ClipMode clip_mode_from_string(const std::string& text);

// Maps weekdays to service classes; "all" for every day by default.
class ServicePartition {
 public:
  ServicePartition();
  // Format: "mon,tue,thu,fri=regular;wed=wednesday". Unlisted days keep "all".
  static ServicePartition parse(std::string_view spec);

  const std::string& class_of(std::chrono::weekday day) const;
  const std::string& class_of_date(std::string_view date) const;

 private:
  std::array<std::string, 7> classes_;
};

struct AssemblyResult {
  std::vector<DelaySeries> series;  // sorted by (train_id, date)
  std::vector<Reject> rejects;
  std::vector<std::string> rejected_dates;  // "train_id/date" with no usable station
};

// Builds one series per date from the events of one train, ordered by the
// template. A date stops at its first missing template station (and, in drop
// mode, at its first out-of-range delay).
AssemblyResult assemble_series(const std::vector<RealizationEvent>& events, const JourneyTemplate& journey,
                               const StateSpace& space, ClipMode clip = ClipMode::saturate);

// Groups events by train and service class and assembles each group against
// its template. Events without a matching template are rejected.
AssemblyResult assemble_all(const std::vector<RealizationEvent>& events,
                            const std::vector<JourneyTemplate>& templates, const ServicePartition& partition,
                            const StateSpace& space, ClipMode clip = ClipMode::saturate);

// Smallest T > S whose planned time is at least planned(S) + horizon, else the
// last station. Indices are 1-based; throws NoTargetError when S is last.
int select_target_station(const JourneyTemplate& journey, int current_index, std::chrono::seconds horizon);

}  // namespace delaychain
