#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sketcher {

enum class Role { System, User, Assistant };

struct TextPart {
  std::string text;
};

struct ImagePart {
  std::vector<std::uint8_t> png;  // encoded PNG bytes
  std::string path;               // optional file reference for serialization
};

using MessagePart = std::variant<TextPart, ImagePart>;

struct Message {
  Role role = Role::User;
  std::vector<MessagePart> parts;

  static Message text(Role role, std::string body);
  std::string joined_text() const;  // text parts concatenated
  bool has_image() const;
};

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view name);

struct ModelConfig {
  std::string endpoint_url;       // e.g. http://host:port/v1/chat/completions
  std::string model_name;
  std::string api_key_env = "SKETCHER_API_KEY";
  double temperature = 0.4;
  int max_tokens = 2048;
  int timeout_seconds = 120;
  int retry_count = 2;
};

struct ModelError : std::runtime_error {
  enum class Kind { Network, Auth, MalformedResponse };
  Kind kind;
  ModelError(Kind k, const std::string& message)
      : std::runtime_error(message), kind(k) {}
};

// Uniform chat-with-images contract. Implementations must be safe for
// concurrent complete() calls and must never return empty texts on failure;
// failures surface as ModelError.
class ModelClient {
 public:
  virtual ~ModelClient() = default;

  // Returns n assistant texts sampled at the given temperature.
  virtual std::vector<std::string> complete(std::span<const Message> messages,
                                            double temperature, int n) = 0;
};

// Validates the transcript shape complete() expects: an optional leading
// system message, a user message first, and no consecutive assistant turns
// (consecutive user turns carry feedback images and are fine).
// Throws std::invalid_argument on violation.
void check_transcript(std::span<const Message> messages, int n);

// Stable textual form of a transcript: one role-tagged line per part,
// image parts reduced to an <image> marker. Fixture keys hash this.
std::string normalize_transcript(std::span<const Message> messages);

// Temperature bands used by the scripted double: high >= 0.7, low below.
std::string_view temperature_band(double temperature);

std::uint64_t fnv1a64(std::string_view bytes);

// Deterministic scripted double for tests and desk-scale experiments.
// Responses are keyed by (normalized transcript hash, temperature band) and
// consumed round-robin; a missing key throws, it never silently falls back.
class ScriptedModel : public ModelClient {
 public:
  void add_response(std::span<const Message> transcript, double temperature,
                    std::vector<std::string> texts);
  void add_response_for_band(std::span<const Message> transcript,
                             std::string_view band,
                             std::vector<std::string> texts);

  std::vector<std::string> complete(std::span<const Message> messages,
                                    double temperature, int n) override;

  std::size_t distinct_keys() const;

 private:
  struct Slot {
    std::vector<std::string> texts;
    std::size_t next = 0;
  };
  std::map<std::pair<std::uint64_t, std::string>, Slot> slots_;
  mutable std::mutex mutex_;
};

// Chat-completions HTTP adapter. POSTs the pinned JSON body shape and reads
// choices[i].message.content; the API key comes from the env var named in
// the config and travels as a bearer token.
class HttpModelClient : public ModelClient {
 public:
  explicit HttpModelClient(ModelConfig config);

  std::vector<std::string> complete(std::span<const Message> messages,
                                    double temperature, int n) override;

  // Request body construction is exposed for tests.
  static std::string build_request_body(const ModelConfig& config,
                                        std::span<const Message> messages,
                                        double temperature, int n);

 private:
  ModelConfig config_;
};

std::string base64_encode(const std::uint8_t* data, std::size_t size);

}  // namespace sketcher
