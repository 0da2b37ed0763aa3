#include "iotmesh/reminder_nlp.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include "iotmesh/logging.hpp"

namespace iotmesh::nlp {

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string collapse_spaces(const std::string& s) {
  std::string out;
  bool in_space = true;  // also trims leading space
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out += ' ';
      in_space = true;
    } else {
      out += c;
      in_space = false;
    }
  }
  while (!out.empty() && (out.back() == ' ' || out.back() == ',' || out.back() == '.')) {
    out.pop_back();
  }
  return out;
}

bool word_boundary_before(const std::string& text, std::size_t i) {
  return i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1]));
}

constexpr std::array<const char*, 7> kWeekdays = {
    "sunday", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday"};

constexpr std::array<const char*, 12> kMonths = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

const std::regex& every_day_re() {
  static const std::regex re(R"(\b(?:every day|daily)\b)", std::regex::icase);
  return re;
}

const std::regex& weekday_recurrence_re() {
  static const std::regex re(
      R"(\b(?:on\s+(sunday|monday|tuesday|wednesday|thursday|friday|saturday)s|every\s+(sunday|monday|tuesday|wednesday|thursday|friday|saturday))\b)",
      std::regex::icase);
  return re;
}

const std::regex& tomorrow_re() {
  static const std::regex re(R"(\btomorrow\b)", std::regex::icase);
  return re;
}

const std::regex& explicit_time_re() {
  static const std::regex re(R"(\bat\s+(\d{1,2})(?::(\d{2}))?\s*(am|pm)?\b)", std::regex::icase);
  return re;
}

const std::regex& month_day_re() {
  static const std::regex re(
      R"(\b(?:on\s+)?(january|february|march|april|may|june|july|august|september|october|november|december)\s+(\d{1,2})(?:st|nd|rd|th)?\b)",
      std::regex::icase);
  return re;
}

// Patterns stripped from the activity body, applied in order. Larger
// phrases go first so their leftovers do not survive ("every day" before
// the weekday words, etc.).
const std::vector<std::regex>& body_removal_res() {
  static const std::vector<std::regex> res = [] {
    std::vector<std::regex> v;
    auto icase = std::regex::icase;
    v.emplace_back(R"(\b(?:every day|daily)\b)", icase);
    v.emplace_back(
        R"(\b(?:on|every)\s+(?:sunday|monday|tuesday|wednesday|thursday|friday|saturday)s?\b)",
        icase);
    v.emplace_back(R"(\btomorrow\b)", icase);
    v.emplace_back(R"(\bat\s+\d{1,2}(?::\d{2})?\s*(?:am|pm)?\b)", icase);
    v.emplace_back(
        R"(\b(?:on\s+)?(?:january|february|march|april|may|june|july|august|september|october|november|december)\s+\d{1,2}(?:st|nd|rd|th)?\b)",
        icase);
    v.emplace_back(R"(\bafter lunch\b)", icase);
    v.emplace_back(R"(\b(?:in the |at |the )?(?:morning|afternoon|evening|noon|midday)\b)", icase);
    v.emplace_back(R"(\b(?:in the |at |the )?nights?\b)", icase);
    return v;
  }();
  return res;
}

int weekday_index(std::string name) {
  name = to_lower(name);
  for (std::size_t i = 0; i < kWeekdays.size(); ++i) {
    if (name == kWeekdays[i]) return static_cast<int>(i);
  }
  return -1;
}

int month_index(std::string name) {
  name = to_lower(name);
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (name == kMonths[i]) return static_cast<int>(i) + 1;
  }
  return -1;
}

// First occurrence for daily/unanchored reminders: today while the clock
// has not passed the resolved time, otherwise tomorrow.
DateTime today_or_tomorrow(const ReferenceClock& ref, std::pair<int, int> hm) {
  const int ref_minutes = ref.now.hour * 60 + ref.now.minute;
  const int target_minutes = hm.first * 60 + hm.second;
  DateTime date = ref.now;
  if (target_minutes <= ref_minutes) date = date.plus_days(1);
  date.hour = hm.first;
  date.minute = hm.second;
  return date;
}

}  // namespace

bool TemporalExtraction::valid() const {
  if (!when().valid()) return false;
  if (body.empty()) return false;
  if (recurring != repeat_interval_days.has_value()) return false;
  if (repeat_interval_days && *repeat_interval_days < 1) return false;
  return true;
}

Payload TemporalExtraction::to_payload() const {
  Payload p{{"year", year},       {"month", month}, {"day", day},
            {"hour", hour},       {"minute", minute}, {"body", body},
            {"recurring", recurring}};
  if (recurring) {
    p["repeat_unit"] = "DAYS";
    p["repeat_interval"] = *repeat_interval_days;
  }
  return p;
}

std::optional<TemporalExtraction> TemporalExtraction::from_payload(const Payload& payload) {
  if (!payload.is_object()) return std::nullopt;
  TemporalExtraction e;
  try {
    e.year = payload.at("year").get<int>();
    e.month = payload.at("month").get<int>();
    e.day = payload.at("day").get<int>();
    e.hour = payload.at("hour").get<int>();
    e.minute = payload.at("minute").get<int>();
    e.body = payload.at("body").get<std::string>();
    e.recurring = payload.at("recurring").get<bool>();
    if (e.recurring) {
      if (payload.value("repeat_unit", "") != "DAYS") return std::nullopt;
      e.repeat_interval_days = payload.at("repeat_interval").get<int>();
    }
  } catch (const Json::exception&) {
    return std::nullopt;
  }
  if (!e.valid()) return std::nullopt;
  return e;
}

std::vector<std::string> split_clauses(const std::string& text) {
  const std::string lower = to_lower(text);
  std::vector<std::string> pieces;
  std::size_t start = 0;
  std::size_t i = 0;

  auto flush_until = [&](std::size_t end) {
    if (end > start) pieces.push_back(text.substr(start, end - start));
  };

  while (i < text.size()) {
    const char c = text[i];
    if ((c == '.' && (i + 1 >= text.size() ||
                      std::isspace(static_cast<unsigned char>(text[i + 1])))) ||
        c == '!' || c == '?') {
      flush_until(i);
      ++i;
      start = i;
      continue;
    }
    if (word_boundary_before(text, i)) {
      if (lower.compare(i, 12, "furthermore,") == 0) {
        flush_until(i);
        i += 12;
        start = i;
        continue;
      }
      if (lower.compare(i, 5, "also,") == 0) {
        flush_until(i);
        i += 5;
        start = i;
        continue;
      }
      // "and remind me" splits before "remind me"; only the "and" is eaten.
      if (lower.compare(i, 13, "and remind me") == 0) {
        flush_until(i);
        i += 4;
        start = i;
        continue;
      }
    }
    ++i;
  }
  flush_until(text.size());

  std::vector<std::string> clauses;
  for (auto& piece : pieces) {
    std::string trimmed = collapse_spaces(piece);
    if (trimmed.empty()) continue;
    if (to_lower(trimmed).find("remind me") == std::string::npos) continue;
    clauses.push_back(std::move(trimmed));
  }
  return clauses;
}

std::string extract_body(const std::string& clause) {
  const std::string lower = to_lower(clause);
  const std::size_t marker = lower.find("remind me to");
  if (marker == std::string::npos) {
    throw NoActivity("clause has no \"remind me to\" marker: " + clause);
  }
  std::string tail = clause.substr(marker + std::string("remind me to").size());
  for (const auto& re : body_removal_res()) {
    tail = std::regex_replace(tail, re, " ");
  }
  const std::string body = collapse_spaces(tail);
  if (body.empty()) throw NoActivity("clause has temporal phrases but no activity: " + clause);
  return body;
}

std::pair<int, int> resolve_time(const std::string& clause) {
  std::smatch m;
  if (std::regex_search(clause, m, explicit_time_re())) {
    int hour = std::stoi(m[1].str());
    const int minute = m[2].matched ? std::stoi(m[2].str()) : 0;
    const std::string ampm = to_lower(m[3].str());
    if (minute > 59) throw InvalidTime("minute out of range in: " + clause);
    if (!ampm.empty()) {
      if (hour < 1 || hour > 12) throw InvalidTime("12-hour clock value out of range: " + clause);
      if (ampm == "pm" && hour != 12) hour += 12;
      if (ampm == "am" && hour == 12) hour = 0;
    } else if (hour > 23) {
      throw InvalidTime("hour out of range in: " + clause);
    }
    return {hour, minute};
  }

  static const std::vector<std::pair<std::regex, std::pair<int, int>>> lexicon = [] {
    std::vector<std::pair<std::regex, std::pair<int, int>>> v;
    auto icase = std::regex::icase;
    v.emplace_back(std::regex(R"(\bafter lunch\b)", icase), std::pair{14, 0});
    v.emplace_back(std::regex(R"(\bnights?\b)", icase), std::pair{20, 0});
    v.emplace_back(std::regex(R"(\bmorning\b)", icase), std::pair{9, 0});
    v.emplace_back(std::regex(R"(\bnoon\b|\bmidday\b)", icase), std::pair{12, 0});
    v.emplace_back(std::regex(R"(\bafternoon\b)", icase), std::pair{15, 0});
    v.emplace_back(std::regex(R"(\bevening\b)", icase), std::pair{18, 0});
    return v;
  }();
  for (const auto& [re, hm] : lexicon) {
    if (std::regex_search(clause, re)) return hm;
  }
  return {9, 0};
}

DateResolution resolve_date_and_recurrence(const std::string& clause, const ReferenceClock& ref,
                                           std::pair<int, int> resolved_time) {
  DateResolution out;
  std::smatch m;

  if (std::regex_search(clause, every_day_re())) {
    const DateTime first = today_or_tomorrow(ref, resolved_time);
    return {first.year, first.month, first.day, true, 1};
  }

  if (std::regex_search(clause, m, weekday_recurrence_re())) {
    const int target = weekday_index(m[1].matched ? m[1].str() : m[2].str());
    int delta = (target - ref.now.weekday() + 7) % 7;
    const int ref_minutes = ref.now.hour * 60 + ref.now.minute;
    const int target_minutes = resolved_time.first * 60 + resolved_time.second;
    if (delta == 0 && target_minutes <= ref_minutes) delta = 7;
    const DateTime first = ref.now.plus_days(delta);
    return {first.year, first.month, first.day, true, 7};
  }

  if (std::regex_search(clause, tomorrow_re())) {
    const DateTime date = ref.now.plus_days(1);
    return {date.year, date.month, date.day, false, std::nullopt};
  }

  if (std::regex_search(clause, m, month_day_re())) {
    const int month = month_index(m[1].str());
    const int day = std::stoi(m[2].str());
    for (int year = ref.now.year; year <= ref.now.year + 8; ++year) {
      DateTime candidate{year, month, day, resolved_time.first, resolved_time.second};
      if (!candidate.valid()) continue;
      if (candidate >= ref.now) {
        return {candidate.year, candidate.month, candidate.day, false, std::nullopt};
      }
    }
    // No reachable calendar date; fall through to the default rule.
  }

  const DateTime first = today_or_tomorrow(ref, resolved_time);
  return {first.year, first.month, first.day, false, std::nullopt};
}

std::vector<TemporalExtraction> parse_reminders(const std::string& text,
                                                const ReferenceClock& ref) {
  std::vector<TemporalExtraction> out;
  for (const auto& clause : split_clauses(text)) {
    TemporalExtraction extraction;
    try {
      extraction.body = extract_body(clause);
      const auto hm = resolve_time(clause);
      const DateResolution date = resolve_date_and_recurrence(clause, ref, hm);
      extraction.year = date.year;
      extraction.month = date.month;
      extraction.day = date.day;
      extraction.hour = hm.first;
      extraction.minute = hm.second;
      extraction.recurring = date.recurring;
      extraction.repeat_interval_days = date.repeat_interval_days;
    } catch (const NoActivity& e) {
      logging::warn("nlp.clause_skipped", {{"why", e.what()}});
      continue;
    } catch (const InvalidTime& e) {
      logging::warn("nlp.clause_skipped", {{"why", e.what()}});
      continue;
    }
    out.push_back(std::move(extraction));
  }
  return out;
}

}  // namespace iotmesh::nlp
