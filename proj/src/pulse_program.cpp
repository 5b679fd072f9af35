#include "deshell/pulse_program.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "deshell/errors.hpp"

namespace deshell {

namespace {

using json = nlohmann::json;
using Locator = std::function<std::string(std::size_t)>;

// Abutting pulses computed as start + duration may miss each other by an ulp.
constexpr double kTimeSlack = 1e-15;

std::string in_quotes(std::string_view s) { return "'" + std::string(s) + "'"; }

void validate_pulses(const std::vector<Pulse>& pulses, double horizon, const Locator& where) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidSequence("horizon_s: horizon must be positive and finite");
  }
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    const Pulse& p = pulses[i];
    if (!std::isfinite(p.start) || p.start < 0.0) throw InvalidSequence(where(i) + ": start_s must be >= 0");
    if (!std::isfinite(p.duration) || !(p.duration > 0.0)) {
      throw InvalidSequence(where(i) + ": duration_s must be > 0");
    }
    if (!std::isfinite(p.area) || p.area < 0.0) throw InvalidSequence(where(i) + ": area_rad must be >= 0");
    if (!std::isfinite(p.phase)) throw InvalidSequence(where(i) + ": phase_rad must be finite");
    if (!std::isfinite(p.rabi())) throw InvalidSequence(where(i) + ": implied Rabi frequency is not finite");
    if (p.end() > horizon + kTimeSlack) {
      throw InvalidSequence(where(i) + ": pulse ends at " + std::to_string(p.end()) +
                            " s, after the horizon " + std::to_string(horizon) + " s");
    }
  }
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    for (std::size_t j = i + 1; j < pulses.size(); ++j) {
      const Pulse& a = pulses[i];
      const Pulse& b = pulses[j];
      if (a.transition == b.transition && a.start < b.end() - kTimeSlack && b.start < a.end() - kTimeSlack) {
        throw InvalidSequence(where(j) + ": overlaps " + in_quotes(a.label) + " on transition " +
                              std::string(to_string(a.transition)));
      }
    }
  }
}

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// Line numbers of the objects inside the top-level "pulses" array.
std::vector<int> pulse_lines(std::string_view text) {
  std::vector<int> lines;
  std::vector<char> stack;
  std::string last_key;
  bool in_string = false;
  bool escape = false;
  std::string current;
  int line = 1;
  std::size_t pulses_depth = 0;
  for (char ch : text) {
    if (ch == '\n') ++line;
    if (in_string) {
      if (escape) {
        escape = false;
      } else if (ch == '\\') {
        escape = true;
      } else if (ch == '"') {
        in_string = false;
        if (stack.size() == 1) last_key = current;
      } else {
        current.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_string = true;
        current.clear();
        break;
      case '{':
        if (pulses_depth != 0 && stack.size() == pulses_depth) lines.push_back(line);
        stack.push_back(ch);
        break;
      case '[':
        stack.push_back(ch);
        if (stack.size() == 2 && last_key == "pulses") pulses_depth = 2;
        break;
      case '}':
      case ']':
        if (!stack.empty()) stack.pop_back();
        if (stack.size() < pulses_depth) pulses_depth = 0;
        break;
      default:
        break;
    }
  }
  return lines;
}

double required_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing field " + key);
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + ": field " + key + " must be a number");
  return v.get<double>();
}

}  // namespace

std::string_view to_string(Transition transition) {
  return transition == Transition::ground_excited ? "1-3" : "2-3";
}

Transition parse_transition(std::string_view text) {
  if (text == "1-3") return Transition::ground_excited;
  if (text == "2-3") return Transition::spin_excited;
  throw ConfigError("unknown transition " + in_quotes(text) + " (expected \"1-3\" or \"2-3\")");
}

double pulse_area(double rabi, double duration) { return rabi * duration; }

PulseSequence::PulseSequence(std::vector<Pulse> pulses, double horizon, std::string name)
    : pulses_(std::move(pulses)), horizon_(horizon), name_(std::move(name)) {
  validate_pulses(pulses_, horizon_, [this](std::size_t i) {
    return "pulse #" + std::to_string(i) + " " + in_quotes(pulses_[i].label);
  });
  std::stable_sort(pulses_.begin(), pulses_.end(),
                   [](const Pulse& a, const Pulse& b) { return a.start < b.start; });
}

const Pulse* PulseSequence::find(std::string_view label) const {
  auto it = std::find_if(pulses_.begin(), pulses_.end(), [label](const Pulse& p) { return p.label == label; });
  return it == pulses_.end() ? nullptr : &*it;
}

double PulseSequence::last_pulse_end() const {
  double end = 0.0;
  for (const auto& p : pulses_) end = std::max(end, p.end());
  return end;
}

std::vector<double> PulseSequence::edges() const {
  std::vector<double> out;
  for (const auto& p : pulses_) {
    out.push_back(p.start);
    out.push_back(p.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DriveSample drive_at(const PulseSequence& sequence, double t) {
  Complex probe(0.0), coupling(0.0);
  for (const auto& p : sequence.pulses()) {
    if (!p.active_at(t)) continue;
    const Complex field = std::polar(p.rabi(), p.phase);
    (p.transition == Transition::ground_excited ? probe : coupling) += field;
  }
  DriveSample out;
  out.rabi_p = std::abs(probe);
  out.phase_p = out.rabi_p > 0.0 ? std::arg(probe) : 0.0;
  out.rabi_c = std::abs(coupling);
  out.phase_c = out.rabi_c > 0.0 ? std::arg(coupling) : 0.0;
  return out;
}

DriveSchedule drive_schedule(const PulseSequence& sequence) {
  return {[sequence](double t) { return drive_at(sequence, t); }, sequence.edges()};
}

PulseSequence build_three_pulse_echo(const ThreePulseParams& p) {
  if (!(p.t_d < p.t_w && p.t_w < p.t_r)) throw InvalidSequence("three-pulse echo needs t_D < t_W < t_R");
  if (!(p.duration > 0.0)) throw InvalidSequence("pulse duration must be positive");
  if (p.t_d + p.duration > p.t_w + kTimeSlack || p.t_w + p.duration > p.t_r + kTimeSlack) {
    throw InvalidSequence("D, W and R overlap at the requested duration");
  }
  std::vector<Pulse> pulses{
      {"D", Transition::ground_excited, p.t_d, p.duration, p.area, 0.0},
      {"W", Transition::ground_excited, p.t_w, p.duration, p.area, 0.0},
      {"R", Transition::ground_excited, p.t_r, p.duration, p.area, 0.0},
  };
  return PulseSequence(std::move(pulses), p.horizon, "three-pulse echo");
}

PulseSequence build_locked_echo(const ThreePulseParams& base, const DeshellingParams& d) {
  const PulseSequence echo = build_three_pulse_echo(base);
  if (!(d.duration_per_pi > 0.0)) throw InvalidSequence("duration_per_pi must be positive");
  if (d.area_b1 < 0.0 || d.area_b2 < 0.0) throw InvalidSequence("deshelling areas must be >= 0");
  const double b1_duration = d.area_b1 / std::numbers::pi * d.duration_per_pi;
  const double b2_duration = d.area_b2 / std::numbers::pi * d.duration_per_pi;
  if (!(base.t_w < d.t_b1 && d.t_b1 < d.t_b2 && d.t_b2 < base.t_r)) {
    throw InvalidSequence("locked echo needs t_W < t_B1 < t_B2 < t_R");
  }
  if (d.t_b1 + kTimeSlack < base.t_w + base.duration) throw InvalidSequence("B1 starts before W has ended");
  if (d.t_b1 + b1_duration > d.t_b2 + kTimeSlack) throw InvalidSequence("B1 runs into B2");
  if (d.t_b2 + b2_duration > base.t_r + kTimeSlack) {
    throw GeometryError("B2 (area " + std::to_string(d.area_b2 / std::numbers::pi) + " pi) overlaps R");
  }
  std::vector<Pulse> pulses = echo.pulses();
  if (d.area_b1 > 0.0) pulses.push_back({"B1", Transition::spin_excited, d.t_b1, b1_duration, d.area_b1, 0.0});
  if (d.area_b2 > 0.0) pulses.push_back({"B2", Transition::spin_excited, d.t_b2, b2_duration, d.area_b2, 0.0});
  return PulseSequence(std::move(pulses), base.horizon, "locked echo");
}

PulseSequence parse_sequence_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("line " + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("line 1: sequence config must be a JSON object");

  const auto key_line = [text](std::string_view key) {
    const auto pos = text.find("\"" + std::string(key) + "\"");
    return pos == std::string_view::npos ? 1 : line_of_offset(text, pos);
  };
  for (const auto& [key, value] : doc.items()) {
    if (key != "name" && key != "horizon_s" && key != "pulses") {
      throw ConfigError("line " + std::to_string(key_line(key)) + ": unknown field " + key);
    }
  }
  const double horizon = required_number(doc, "horizon_s", "line " + std::to_string(key_line("horizon_s")));
  std::string name;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ConfigError("line " + std::to_string(key_line("name")) + ": name must be a string");
    name = doc["name"].get<std::string>();
  }
  if (!doc.contains("pulses") || !doc["pulses"].is_array()) {
    throw ConfigError("line " + std::to_string(key_line("pulses")) + ": pulses must be an array");
  }

  const auto lines = pulse_lines(text);
  const auto where = [&lines](std::size_t i) {
    const int line = i < lines.size() ? lines[i] : 0;
    return "line " + std::to_string(line) + ": pulses[" + std::to_string(i) + "]";
  };

  std::vector<Pulse> pulses;
  const json& list = doc["pulses"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& entry = list[i];
    const std::string at = where(i);
    if (!entry.is_object()) throw ConfigError(at + ": pulse must be an object");
    for (const auto& [key, value] : entry.items()) {
      static const std::vector<std::string> known{"label", "transition", "start_s", "duration_s", "area_rad",
                                                  "phase_rad"};
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw ConfigError(at + ": unknown field " + key);
      }
    }
    Pulse p;
    if (!entry.contains("label") || !entry["label"].is_string()) throw ConfigError(at + ": label must be a string");
    p.label = entry["label"].get<std::string>();
    if (!entry.contains("transition") || !entry["transition"].is_string()) {
      throw ConfigError(at + ": transition must be \"1-3\" or \"2-3\"");
    }
    try {
      p.transition = parse_transition(entry["transition"].get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(at + ": transition: " + e.what());
    }
    p.start = required_number(entry, "start_s", at);
    p.duration = required_number(entry, "duration_s", at);
    p.area = required_number(entry, "area_rad", at);
    p.phase = entry.contains("phase_rad") ? required_number(entry, "phase_rad", at) : 0.0;
    pulses.push_back(std::move(p));
  }
  validate_pulses(pulses, horizon, [&](std::size_t i) { return where(i) + " " + in_quotes(pulses[i].label); });
  return PulseSequence(std::move(pulses), horizon, std::move(name));
}

std::string serialize_sequence_config(const PulseSequence& sequence) {
  using ordered = nlohmann::ordered_json;
  ordered doc = ordered::object();
  if (!sequence.name().empty()) doc["name"] = sequence.name();
  doc["horizon_s"] = sequence.horizon();
  ordered list = ordered::array();
  for (const auto& p : sequence.pulses()) {
    list.push_back(ordered{{"label", p.label},
                    {"transition", std::string(to_string(p.transition))},
                    {"start_s", p.start},
                    {"duration_s", p.duration},
                    {"area_rad", p.area},
                    {"phase_rad", p.phase}});
  }
  doc["pulses"] = std::move(list);
  return doc.dump(2) + "\n";
}

PulseSequence load_sequence_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read sequence config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_sequence_config(buffer.str());
  } catch (const InvalidSequence& e) {
    throw InvalidSequence(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace deshell
