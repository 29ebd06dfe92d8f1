#include "sketcher/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace sketcher {
namespace {

constexpr std::string_view kBeginWord = "BEGIN";
constexpr std::string_view kEndWord = "END";

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

// Plain decimal numbers only: optional sign, digits, at most one dot.
// Exponents, hex, inf and nan are rejected.
bool parse_number(std::string_view token, double& out) {
  std::size_t i = 0;
  if (i < token.size() && (token[i] == '+' || token[i] == '-')) ++i;
  std::size_t digits = 0, dots = 0;
  for (; i < token.size(); ++i) {
    char c = token[i];
    if (c >= '0' && c <= '9') {
      ++digits;
    } else if (c == '.') {
      ++dots;
    } else {
      return false;
    }
  }
  if (digits == 0 || dots > 1) return false;
  out = std::strtod(std::string(token).c_str(), nullptr);
  return std::isfinite(out);
}

struct LineParser {
  const std::vector<std::string_view>& tokens;
  int line_no;
  const ParseOptions& opts;
  std::vector<ParseDiagnostic>& diags;
  bool failed = false;

  void add(DiagnosticKind kind, std::string message) {
    diags.push_back({line_no, kind, std::move(message)});
    failed = true;
  }

  bool check_arity(std::size_t expected) {
    if (tokens.size() == expected) return true;
    add(DiagnosticKind::ArityError,
        std::string(tokens[0]) + " expects " + std::to_string(expected - 1) +
            " arguments, got " + std::to_string(tokens.size() - 1));
    return false;
  }

  std::string id(std::size_t idx) { return std::string(tokens[idx]); }

  double number(std::size_t idx) {
    double value = 0;
    if (!parse_number(tokens[idx], value)) {
      add(DiagnosticKind::NumberFormat,
          "not a finite decimal number: '" + std::string(tokens[idx]) + "'");
      return 0;
    }
    return value;
  }

  double unit_coord(std::size_t idx) {
    double value = number(idx);
    if (failed) return value;
    if (value < 0.0 || value > 1.0) {
      if (opts.strict_coords) {
        add(DiagnosticKind::CoordOutOfRange,
            "coordinate " + std::string(tokens[idx]) + " outside [0,1]");
      } else {
        value = std::clamp(value, 0.0, 1.0);
      }
    }
    return value;
  }

  double unit_length(std::size_t idx) {
    double value = number(idx);
    if (failed) return value;
    if (value <= 0.0) {
      add(DiagnosticKind::CoordOutOfRange,
          "length " + std::string(tokens[idx]) + " must be positive");
    } else if (value > 1.0) {
      if (opts.strict_coords) {
        add(DiagnosticKind::CoordOutOfRange,
            "length " + std::string(tokens[idx]) + " outside (0,1]");
      } else {
        value = 1.0;
      }
    }
    return value;
  }

  std::string color(std::size_t idx) {
    if (!is_supported_color(tokens[idx])) {
      add(DiagnosticKind::UnknownColor,
          "unsupported color '" + std::string(tokens[idx]) + "'");
    }
    return std::string(tokens[idx]);
  }
};

int line_of_offset(std::string_view text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

const std::vector<std::string>& supported_colors() {
  static const std::vector<std::string> kColors = {
      "red", "blue", "green", "purple", "black", "orange", "yellow", "cyan"};
  return kColors;
}

bool is_supported_color(std::string_view name) {
  const auto& colors = supported_colors();
  return std::find(colors.begin(), colors.end(), name) != colors.end();
}

ParseResult parse_script(std::string_view text, const ParseOptions& opts,
                         int line_offset) {
  ParseResult result;
  std::vector<Command> commands;

  std::size_t pos = 0;
  int local_line = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    ++local_line;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto tokens = split_tokens(line);
    if (!tokens.empty()) {
      LineParser p{tokens, line_offset + local_line, opts, result.diagnostics};
      std::string_view keyword = tokens[0];
      if (keyword == "create_point") {
        if (p.check_arity(5)) {
          CreatePointCmd cmd{p.id(1), p.unit_coord(2), p.unit_coord(3), p.color(4)};
          if (!p.failed) commands.push_back(std::move(cmd));
        }
      } else if (keyword == "create_line") {
        if (p.check_arity(7)) {
          CreateLineCmd cmd{p.id(1), p.unit_coord(2), p.unit_coord(3),
                            p.unit_coord(4), p.unit_coord(5), p.color(6)};
          if (!p.failed) commands.push_back(std::move(cmd));
        }
      } else if (keyword == "create_circle") {
        if (p.check_arity(6)) {
          CreateCircleCmd cmd{p.id(1), p.unit_coord(2), p.unit_coord(3),
                              p.unit_length(4), p.color(5)};
          if (!p.failed) commands.push_back(std::move(cmd));
        }
      } else if (keyword == "create_rectangle") {
        if (p.check_arity(7)) {
          CreateRectangleCmd cmd{p.id(1), p.unit_coord(2), p.unit_coord(3),
                                 p.unit_coord(4), p.unit_coord(5), p.color(6)};
          if (!p.failed) commands.push_back(std::move(cmd));
        }
      } else if (keyword == "create_arrow") {
        if (p.check_arity(7)) {
          CreateArrowCmd cmd{p.id(1), p.unit_coord(2), p.unit_coord(3),
                             p.unit_coord(4), p.unit_coord(5), p.color(6)};
          if (!p.failed) commands.push_back(std::move(cmd));
        }
      } else if (keyword == "translate") {
        if (p.check_arity(4)) {
          TranslateCmd cmd{p.id(1), p.number(2), p.number(3)};
          if (!p.failed) commands.push_back(std::move(cmd));
        }
      } else if (keyword == "rotate") {
        if (p.check_arity(5)) {
          RotateCmd cmd{p.id(1), p.number(2), p.unit_coord(3), p.unit_coord(4)};
          if (!p.failed) commands.push_back(std::move(cmd));
        }
      } else if (keyword == "delete") {
        if (p.check_arity(2)) {
          DeleteCmd cmd{p.id(1)};
          if (!p.failed) commands.push_back(std::move(cmd));
        }
      } else {
        p.add(DiagnosticKind::UnknownCommand,
              "unknown command '" + std::string(keyword) + "'");
      }
    }

    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }

  if (result.diagnostics.empty()) {
    result.script = Script{std::move(commands), 0, text.size()};
  }
  return result;
}

namespace {

// Offsets of standalone word occurrences (no adjacent word characters).
std::vector<std::size_t> find_word(std::string_view text, std::string_view word) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while ((pos = text.find(word, pos)) != std::string_view::npos) {
    bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
    std::size_t end = pos + word.size();
    bool right_ok = end >= text.size() || !is_word_char(text[end]);
    if (left_ok && right_ok) out.push_back(pos);
    pos = end;
  }
  return out;
}

}  // namespace

ExtractResult extract_blocks(std::string_view message, const ParseOptions& opts) {
  ExtractResult result;

  struct Marker {
    std::size_t pos;
    bool is_begin;
  };
  std::vector<Marker> markers;
  for (std::size_t p : find_word(message, kBeginWord)) markers.push_back({p, true});
  for (std::size_t p : find_word(message, kEndWord)) markers.push_back({p, false});
  std::sort(markers.begin(), markers.end(),
            [](const Marker& a, const Marker& b) { return a.pos < b.pos; });

  std::optional<std::size_t> open;  // offset just past the open BEGIN word
  std::optional<std::size_t> open_marker_pos;
  auto report_unclosed = [&](std::size_t begin_pos) {
    result.diagnostics.push_back({line_of_offset(message, begin_pos),
                                  DiagnosticKind::MissingEnd,
                                  "BEGIN without matching END"});
  };

  for (const Marker& m : markers) {
    if (m.is_begin) {
      if (open) report_unclosed(*open_marker_pos);
      open = m.pos + kBeginWord.size();
      open_marker_pos = m.pos;
    } else if (open) {
      std::string_view body = message.substr(*open, m.pos - *open);
      ParseResult parsed =
          parse_script(body, opts, line_of_offset(message, *open) - 1);
      if (parsed.ok()) {
        parsed.script->span_begin = *open;
        parsed.script->span_end = m.pos;
        result.scripts.push_back(std::move(*parsed.script));
      } else {
        result.diagnostics.insert(result.diagnostics.end(),
                                  parsed.diagnostics.begin(),
                                  parsed.diagnostics.end());
      }
      open.reset();
      open_marker_pos.reset();
    }
    // A stray END outside any block is prose.
  }
  if (open) report_unclosed(*open_marker_pos);
  return result;
}

ExtractResult parse_source(std::string_view text, const ParseOptions& opts) {
  if (!find_word(text, kBeginWord).empty()) {
    return extract_blocks(text, opts);
  }
  ExtractResult result;
  if (!find_word(text, kEndWord).empty()) {
    result.diagnostics.push_back({line_of_offset(text, find_word(text, kEndWord)[0]),
                                  DiagnosticKind::MissingBegin,
                                  "END without preceding BEGIN"});
    return result;
  }
  ParseResult parsed = parse_script(text, opts);
  if (parsed.ok()) {
    if (!parsed.script->commands.empty()) result.scripts.push_back(std::move(*parsed.script));
  } else {
    result.diagnostics = std::move(parsed.diagnostics);
  }
  return result;
}

std::string format_coord(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

namespace {

struct CanonicalWriter {
  std::string& out;

  void line(std::initializer_list<std::string> parts) {
    bool first = true;
    for (const auto& part : parts) {
      if (!first) out += ' ';
      out += part;
      first = false;
    }
    out += '\n';
  }

  void operator()(const CreatePointCmd& c) {
    line({"create_point", c.id, format_coord(c.x), format_coord(c.y), c.color});
  }
  void operator()(const CreateLineCmd& c) {
    line({"create_line", c.id, format_coord(c.x1), format_coord(c.y1),
          format_coord(c.x2), format_coord(c.y2), c.color});
  }
  void operator()(const CreateCircleCmd& c) {
    line({"create_circle", c.id, format_coord(c.cx), format_coord(c.cy),
          format_coord(c.radius), c.color});
  }
  void operator()(const CreateRectangleCmd& c) {
    line({"create_rectangle", c.id, format_coord(c.x1), format_coord(c.y1),
          format_coord(c.x2), format_coord(c.y2), c.color});
  }
  void operator()(const CreateArrowCmd& c) {
    line({"create_arrow", c.id, format_coord(c.x1), format_coord(c.y1),
          format_coord(c.x2), format_coord(c.y2), c.color});
  }
  void operator()(const TranslateCmd& c) {
    line({"translate", c.id, format_coord(c.dx), format_coord(c.dy)});
  }
  void operator()(const RotateCmd& c) {
    line({"rotate", c.id, format_coord(c.angle), format_coord(c.cx),
          format_coord(c.cy)});
  }
  void operator()(const DeleteCmd& c) { line({"delete", c.id}); }
};

}  // namespace

std::string canonicalize(const Script& script) {
  std::string out;
  CanonicalWriter writer{out};
  for (const Command& cmd : script.commands) std::visit(writer, cmd);
  if (!out.empty()) out.pop_back();  // no trailing newline
  return out;
}

std::string canonical_code(const std::vector<Script>& scripts) {
  std::string out;
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += canonicalize(scripts[i]);
  }
  return out;
}

std::string_view to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::UnknownCommand: return "unknown-command";
    case DiagnosticKind::ArityError: return "arity-error";
    case DiagnosticKind::NumberFormat: return "number-format";
    case DiagnosticKind::CoordOutOfRange: return "coord-out-of-range";
    case DiagnosticKind::UnknownColor: return "unknown-color";
    case DiagnosticKind::MissingBegin: return "missing-begin";
    case DiagnosticKind::MissingEnd: return "missing-end";
  }
  return "unknown";
}

std::string format_diagnostic(const ParseDiagnostic& diag) {
  return "line " + std::to_string(diag.line) + ": " +
         std::string(to_string(diag.kind)) + ": " + diag.message;
}

}  // namespace sketcher
