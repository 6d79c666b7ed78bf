#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tls_assist/core_types.hpp"
#include "tls_assist/tlr_pipeline.hpp"
#include "tls_assist/tsr_pipeline.hpp"

namespace tls_assist {

// Light and sign dictionaries. Speed-limit sign templates may use the placeholder "{x}",
// which is replaced by the limit in km/h when the templates are loaded.
class MessageTemplates {
 public:
  using LightTable = std::array<std::string, 4>;  // by index_of(LightState)
  using SignTable = std::array<std::string, 6>;   // by index_of(SignClass)

  static constexpr std::string_view kSpeedPlaceholder = "{x}";

  // Throws ConfigError (key "templates.lights.<state>" / "templates.signs.<class>") when an
  // entry is empty where text is required, non-empty for no_detection/off, keeps an unfilled
  // placeholder, or duplicates another entry.
  static MessageTemplates make(LightTable lights, SignTable signs);
  static MessageTemplates defaults();

  [[nodiscard]] const std::string& light(LightState s) const noexcept {
    return lights_[index_of(s)];
  }
  [[nodiscard]] const std::string& sign(SignClass s) const noexcept {
    return rendered_signs_[index_of(s)];
  }
  [[nodiscard]] const LightTable& raw_lights() const noexcept { return lights_; }
  [[nodiscard]] const SignTable& raw_signs() const noexcept { return raw_signs_; }

  // Reverse lookups used by consumers that act on message text. Empty text maps to
  // no_detection / off.
  [[nodiscard]] std::optional<LightState> match_light(std::string_view text) const noexcept;
  [[nodiscard]] std::optional<SignClass> match_sign(std::string_view text) const noexcept;

 private:
  LightTable lights_;
  SignTable raw_signs_;
  SignTable rendered_signs_;
};

struct NoticeMessage {
  std::int64_t frame_index = 0;
  std::string light_part;
  std::string sign_part;
  std::string text;

  [[nodiscard]] bool empty() const noexcept { return text.empty(); }
  bool operator==(const NoticeMessage&) const = default;
};

std::string light_message(LightState state, const MessageTemplates& t);
std::string sign_message(const PrioritizedSign& sign, const MessageTemplates& t);

// Light part first, then sign part, single space between non-empty parts.
NoticeMessage compose(const ValidatedLightState& light, const PrioritizedSign& sign,
                      const MessageTemplates& t, std::int64_t frame_index = 0);

}  // namespace tls_assist
