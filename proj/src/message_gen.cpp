#include "tls_assist/message_gen.hpp"

#include <string>

namespace tls_assist {

namespace {

std::string render_speed(const std::string& raw, int kmh) {
  std::string out = raw;
  const std::string value = std::to_string(kmh);
  for (std::size_t pos = out.find(MessageTemplates::kSpeedPlaceholder); pos != std::string::npos;
       pos = out.find(MessageTemplates::kSpeedPlaceholder, pos + value.size())) {
    out.replace(pos, MessageTemplates::kSpeedPlaceholder.size(), value);
  }
  return out;
}

bool has_placeholder(const std::string& s) {
  return s.find('{') != std::string::npos || s.find('}') != std::string::npos;
}

void check_entry(const std::string& key, const std::string& text, bool must_be_empty) {
  if (must_be_empty && !text.empty()) {
    throw ConfigError(key, "entry must be empty (no message for absent objects)");
  }
  if (!must_be_empty && text.empty()) throw ConfigError(key, "entry must not be empty");
  if (has_placeholder(text)) throw ConfigError(key, "template has an unfilled placeholder");
  if (!text.empty() && (text.front() == ' ' || text.back() == ' ')) {
    throw ConfigError(key, "template has leading or trailing whitespace");
  }
}

}  // namespace

MessageTemplates MessageTemplates::make(LightTable lights, SignTable signs) {
  MessageTemplates t;
  t.lights_ = std::move(lights);
  t.raw_signs_ = std::move(signs);
  for (LightState s : kAllLightStates) {
    check_entry("templates.lights." + std::string(to_string(s)), t.lights_[index_of(s)],
                s == LightState::no_detection);
  }
  for (SignClass s : kAllSignClasses) {
    const std::string& raw = t.raw_signs_[index_of(s)];
    std::string rendered = raw;
    if (auto kmh = speed_limit_kmh(s)) rendered = render_speed(raw, *kmh);
    check_entry("templates.signs." + std::string(to_string(s)), rendered, s == SignClass::off);
    t.rendered_signs_[index_of(s)] = std::move(rendered);
  }
  // Reverse lookup needs distinct texts within each dictionary.
  for (std::size_t i = 0; i < t.lights_.size(); ++i) {
    for (std::size_t j = i + 1; j < t.lights_.size(); ++j) {
      if (!t.lights_[i].empty() && t.lights_[i] == t.lights_[j]) {
        throw ConfigError("templates.lights." + std::string(to_string(kAllLightStates[j])),
                          "duplicates another light template");
      }
    }
  }
  for (std::size_t i = 0; i < t.rendered_signs_.size(); ++i) {
    for (std::size_t j = i + 1; j < t.rendered_signs_.size(); ++j) {
      if (!t.rendered_signs_[i].empty() && t.rendered_signs_[i] == t.rendered_signs_[j]) {
        throw ConfigError("templates.signs." + std::string(to_string(kAllSignClasses[j])),
                          "duplicates another sign template");
      }
    }
  }
  return t;
}

MessageTemplates MessageTemplates::defaults() {
  LightTable lights;
  lights[index_of(LightState::red)] = "Red light ahead, stop the vehicle!";
  lights[index_of(LightState::yellow)] = "Yellow light ahead, prepare to stop.";
  lights[index_of(LightState::green)] = "Green light ahead, proceed with caution.";
  lights[index_of(LightState::no_detection)] = "";
  SignTable signs;
  signs[index_of(SignClass::stop)] = "Stop sign ahead, come to a complete stop.";
  signs[index_of(SignClass::yield)] = "Yield sign ahead, give way to other traffic.";
  signs[index_of(SignClass::speed_limit_30)] = "Limit speed to {x} km/h.";
  signs[index_of(SignClass::speed_limit_60)] = "Limit speed to {x} km/h.";
  signs[index_of(SignClass::speed_limit_90)] = "Limit speed to {x} km/h.";
  signs[index_of(SignClass::off)] = "";
  return make(std::move(lights), std::move(signs));
}

std::optional<LightState> MessageTemplates::match_light(std::string_view text) const noexcept {
  for (LightState s : kAllLightStates) {
    if (lights_[index_of(s)] == text) return s;
  }
  return std::nullopt;
}

std::optional<SignClass> MessageTemplates::match_sign(std::string_view text) const noexcept {
  for (SignClass s : kAllSignClasses) {
    if (rendered_signs_[index_of(s)] == text) return s;
  }
  return std::nullopt;
}

std::string light_message(LightState state, const MessageTemplates& t) { return t.light(state); }

std::string sign_message(const PrioritizedSign& sign, const MessageTemplates& t) {
  return t.sign(sign.sign);
}

NoticeMessage compose(const ValidatedLightState& light, const PrioritizedSign& sign,
                      const MessageTemplates& t, std::int64_t frame_index) {
  NoticeMessage m;
  m.frame_index = frame_index;
  m.light_part = t.light(light.state);
  m.sign_part = t.sign(sign.sign);
  m.text.reserve(m.light_part.size() + m.sign_part.size() + 1);
  m.text = m.light_part;
  if (!m.light_part.empty() && !m.sign_part.empty()) m.text += ' ';
  m.text += m.sign_part;
  return m;
}

}  // namespace tls_assist
