#ifndef IOTMESH_REMINDER_NLP_HPP
#define IOTMESH_REMINDER_NLP_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iotmesh/datetime.hpp"
#include "iotmesh/value.hpp"

namespace iotmesh::nlp {

// One parsed reminder: when, what, and whether it repeats. The only
// supported repeat unit is whole days.
struct TemporalExtraction {
  int year = 0;
  int month = 0;
  int day = 0;
  int hour = 0;
  int minute = 0;
  std::string body;
  bool recurring = false;
  std::optional<int> repeat_interval_days;

  bool valid() const;
  DateTime when() const { return DateTime{year, month, day, hour, minute}; }

  Payload to_payload() const;
  static std::optional<TemporalExtraction> from_payload(const Payload& payload);

  friend bool operator==(const TemporalExtraction&, const TemporalExtraction&) = default;
};

// Resolves relative expressions ("tomorrow", "on sundays") against an
// explicit now instead of the wall clock, so parses are reproducible.
struct ReferenceClock {
  DateTime now;
};

class NoActivity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidTime : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Splits on sentence boundaries (". ", "!", "?") and the connectives
// "furthermore," / "also," / "and remind me"; keeps only clauses that
// mention "remind me", in order.
std::vector<std::string> split_clauses(const std::string& text);

// Text after "remind me to" with every matched temporal phrase removed and
// whitespace normalized. Throws NoActivity when nothing is left.
std::string extract_body(const std::string& clause);

// (hour, minute). Explicit "at H[:MM] [am|pm]" wins over the lexicon
// ("after lunch" 14:00, "night(s)" 20:00, "morning" 9:00, "noon" 12:00,
// "afternoon" 15:00, "evening" 18:00); no match defaults to 9:00.
// Throws InvalidTime for out-of-range clock values.
std::pair<int, int> resolve_time(const std::string& clause);

struct DateResolution {
  int year = 0;
  int month = 0;
  int day = 0;
  bool recurring = false;
  std::optional<int> repeat_interval_days;
};

// Priority order: "every day"/"daily" (interval 1), plural/every weekday
// (interval 7), "tomorrow", explicit "<month> <day>", else today-or-tomorrow.
// The first occurrence is never scheduled in the past.
DateResolution resolve_date_and_recurrence(const std::string& clause, const ReferenceClock& ref,
                                           std::pair<int, int> resolved_time);

// Full pipeline; clauses with no activity text are skipped with a warning.
std::vector<TemporalExtraction> parse_reminders(const std::string& text,
                                                const ReferenceClock& ref);

}  // namespace iotmesh::nlp

#endif
