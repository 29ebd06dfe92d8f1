#include "sketcher/model.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <thread>

namespace sketcher {

using json = nlohmann::json;

Message Message::text(Role role, std::string body) {
  Message m;
  m.role = role;
  m.parts.push_back(TextPart{std::move(body)});
  return m;
}

std::string Message::joined_text() const {
  std::string out;
  for (const MessagePart& part : parts) {
    if (const auto* t = std::get_if<TextPart>(&part)) out += t->text;
  }
  return out;
}

bool Message::has_image() const {
  for (const MessagePart& part : parts) {
    if (std::holds_alternative<ImagePart>(part)) return true;
  }
  return false;
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::optional<Role> role_from_string(std::string_view name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  return std::nullopt;
}

void check_transcript(std::span<const Message> messages, int n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (messages.empty()) throw std::invalid_argument("empty transcript");
  std::size_t i = 0;
  if (messages[0].role == Role::System) ++i;
  if (i >= messages.size() || messages[i].role != Role::User) {
    throw std::invalid_argument("transcript must start with a user turn");
  }
  for (std::size_t k = i; k < messages.size(); ++k) {
    const Message& m = messages[k];
    if (m.parts.empty()) throw std::invalid_argument("message without parts");
    if (m.role == Role::System) {
      throw std::invalid_argument("system message after the first turn");
    }
    if (m.role == Role::Assistant) {
      if (m.has_image()) {
        throw std::invalid_argument("assistant messages are text-only");
      }
      if (k > i && messages[k - 1].role == Role::Assistant) {
        throw std::invalid_argument("consecutive assistant turns");
      }
    }
  }
}

std::string normalize_transcript(std::span<const Message> messages) {
  std::string out;
  for (const Message& m : messages) {
    out += to_string(m.role);
    out += ':';
    for (const MessagePart& part : m.parts) {
      if (const auto* t = std::get_if<TextPart>(&part)) {
        out += t->text;
      } else {
        out += "<image>";
      }
      out += '\x1f';
    }
    out += '\n';
  }
  return out;
}

std::string_view temperature_band(double temperature) {
  return temperature >= 0.7 ? "high" : "low";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

void ScriptedModel::add_response(std::span<const Message> transcript,
                                 double temperature,
                                 std::vector<std::string> texts) {
  add_response_for_band(transcript, temperature_band(temperature), std::move(texts));
}

void ScriptedModel::add_response_for_band(std::span<const Message> transcript,
                                          std::string_view band,
                                          std::vector<std::string> texts) {
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(fnv1a64(normalize_transcript(transcript)), std::string(band));
  Slot& slot = slots_[key];
  for (auto& t : texts) slot.texts.push_back(std::move(t));
}

std::vector<std::string> ScriptedModel::complete(std::span<const Message> messages,
                                                 double temperature, int n) {
  check_transcript(messages, n);
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(fnv1a64(normalize_transcript(messages)),
                            std::string(temperature_band(temperature)));
  auto it = slots_.find(key);
  if (it == slots_.end() || it->second.texts.empty()) {
    throw std::logic_error("ScriptedModel: no fixture for transcript (band " +
                           key.second + "):\n" + normalize_transcript(messages));
  }
  Slot& slot = it->second;
  std::vector<std::string> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(slot.texts[slot.next % slot.texts.size()]);
    ++slot.next;
  }
  return out;
}

std::size_t ScriptedModel::distinct_keys() const {
  std::lock_guard lock(mutex_);
  return slots_.size();
}

namespace {

constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

json part_to_json(const MessagePart& part) {
  if (const auto* t = std::get_if<TextPart>(&part)) {
    return json{{"type", "text"}, {"text", t->text}};
  }
  const auto& img = std::get<ImagePart>(part);
  std::string url = "data:image/png;base64," + base64_encode(img.png.data(), img.png.size());
  return json{{"type", "image_url"}, {"image_url", {{"url", url}}}};
}

json messages_to_json(std::span<const Message> messages) {
  json arr = json::array();
  for (const Message& m : messages) {
    json content = json::array();
    for (const MessagePart& part : m.parts) content.push_back(part_to_json(part));
    arr.push_back({{"role", std::string(to_string(m.role))}, {"content", std::move(content)}});
  }
  return arr;
}

// Accepts both the plain-string and the content-array response shapes.
std::string content_to_text(const json& content) {
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string out;
    for (const auto& piece : content) {
      if (piece.contains("text") && piece["text"].is_string()) {
        out += piece["text"].get<std::string>();
      }
    }
    return out;
  }
  throw ModelError(ModelError::Kind::MalformedResponse,
                   "unexpected message content type");
}

struct ParsedEndpoint {
  std::string host_port;  // scheme://host:port for httplib client
  std::string path;
};

ParsedEndpoint parse_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ModelError(ModelError::Kind::Network, "endpoint must include scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/v1/chat/completions"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t size) {
  std::string out;
  out.reserve((size + 2) / 3 * 4);
  for (std::size_t i = 0; i < size; i += 3) {
    std::uint32_t chunk = static_cast<std::uint32_t>(data[i]) << 16;
    if (i + 1 < size) chunk |= static_cast<std::uint32_t>(data[i + 1]) << 8;
    if (i + 2 < size) chunk |= data[i + 2];
    out.push_back(kBase64Alphabet[(chunk >> 18) & 0x3f]);
    out.push_back(kBase64Alphabet[(chunk >> 12) & 0x3f]);
    out.push_back(i + 1 < size ? kBase64Alphabet[(chunk >> 6) & 0x3f] : '=');
    out.push_back(i + 2 < size ? kBase64Alphabet[chunk & 0x3f] : '=');
  }
  return out;
}

HttpModelClient::HttpModelClient(ModelConfig config) : config_(std::move(config)) {
  if (config_.retry_count < 0) {
    throw std::invalid_argument("retry_count must be >= 0");
  }
  if (config_.timeout_seconds < 1) {
    throw std::invalid_argument("timeout must be >= 1 second");
  }
}

std::string HttpModelClient::build_request_body(const ModelConfig& config,
                                                std::span<const Message> messages,
                                                double temperature, int n) {
  json body;
  body["model"] = config.model_name;
  body["temperature"] = temperature;
  body["n"] = n;
  body["max_tokens"] = config.max_tokens;
  body["messages"] = messages_to_json(messages);
  return body.dump();
}

std::vector<std::string> HttpModelClient::complete(std::span<const Message> messages,
                                                   double temperature, int n) {
  check_transcript(messages, n);
  ParsedEndpoint endpoint = parse_endpoint(config_.endpoint_url);
  std::string body = build_request_body(config_, messages, temperature, n);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retry_count; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
    }
    httplib::Client client(endpoint.host_port);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);

    auto res = client.Post(endpoint.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;  // retryable
    }
    if (res->status == 401 || res->status == 403) {
      throw ModelError(ModelError::Kind::Auth,
                       "authentication failed (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;  // retryable
    }
    if (res->status != 200) {
      throw ModelError(ModelError::Kind::MalformedResponse,
                       "HTTP " + std::to_string(res->status) + ": " + res->body);
    }

    json payload = json::parse(res->body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("choices") ||
        !payload["choices"].is_array()) {
      throw ModelError(ModelError::Kind::MalformedResponse,
                       "response is not a chat completion object");
    }
    std::vector<std::string> texts;
    for (const auto& choice : payload["choices"]) {
      if (!choice.contains("message") || !choice["message"].contains("content")) {
        throw ModelError(ModelError::Kind::MalformedResponse, "choice without message content");
      }
      texts.push_back(content_to_text(choice["message"]["content"]));
    }
    if (static_cast<int>(texts.size()) < n) {
      throw ModelError(ModelError::Kind::MalformedResponse,
                       "expected " + std::to_string(n) + " choices, got " +
                           std::to_string(texts.size()));
    }
    texts.resize(n);
    return texts;
  }
  throw ModelError(ModelError::Kind::Network,
                   "request failed after " + std::to_string(config_.retry_count + 1) +
                       " attempts: " + last_error);
}

}  // namespace sketcher
