#include "delaychain/app/config.hpp"

#include <algorithm>
#include <limits>
#include <thread>

namespace delaychain::app {

unsigned RunConfig::worker_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

bool Selection::accepts_train(const std::string& train_id) const {
  return trains.empty() || std::find(trains.begin(), trains.end(), train_id) != trains.end();
}

bool Selection::accepts_date(const std::string& date) const {
  if (!dates.empty() && std::find(dates.begin(), dates.end(), date) == dates.end()) return false;
  if (std::find(exclude_dates.begin(), exclude_dates.end(), date) != exclude_dates.end()) return false;
  // ISO dates order lexicographically.
  if (date_from && date < *date_from) return false;
  if (date_to && date > *date_to) return false;
  return true;
}

bool Selection::accepts_template(const JourneyTemplate& journey) const {
  if (!accepts_train(journey.train_id)) return false;
  if (!time_from && !time_to) return true;
  const int from = time_from.value_or(0);
  const int to = time_to.value_or(std::numeric_limits<int>::max());
  return std::any_of(journey.stops.begin(), journey.stops.end(),
                     [&](const TemplateStop& s) { return s.planned_seconds >= from && s.planned_seconds <= to; });
}

int Selection::window_origin(const JourneyTemplate& journey) const {
  if (!time_from) return 0;
  for (std::size_t k = 0; k < journey.stops.size(); ++k) {
    if (journey.stops[k].planned_seconds >= *time_from) return static_cast<int>(k) + 1;
  }
  return 0;
}

}  // namespace delaychain::app
