#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "pshield/corpus.hpp"
#include "pshield/text.hpp"

namespace pshield {
namespace {

using Rewrite = std::optional<std::string>;

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::string lower(std::string_view s) { return text::ascii_lower(s); }

std::string random_name(Rng& rng, std::size_t lo, std::size_t hi) {
  const std::size_t len = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
  std::string out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(static_cast<char>('a' + rng.below(26)));
  return out;
}

// Content range [begin, end) of a single-quoted literal; '' is an escaped
// quote inside it.
struct Literal {
  std::size_t begin;
  std::size_t end;
};

std::vector<Literal> single_quoted(std::string_view s) {
  std::vector<Literal> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '\'') {
      ++i;
      continue;
    }
    const std::size_t begin = ++i;
    while (i < s.size()) {
      if (s[i] == '\'' && i + 1 < s.size() && s[i + 1] == '\'') {
        i += 2;
      } else if (s[i] == '\'') {
        break;
      } else {
        ++i;
      }
    }
    if (i >= s.size()) break;  // unterminated
    out.push_back({begin, i});
    ++i;
  }
  return out;
}

std::string unescape_single(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.push_back(s[i]);
    if (s[i] == '\'' && i + 1 < s.size() && s[i + 1] == '\'') ++i;
  }
  return out;
}

std::string escape_single(std::string_view s) {
  std::string out;
  for (char c : s) {
    out.push_back(c);
    if (c == '\'') out.push_back('\'');
  }
  return out;
}

std::string quote(std::string_view raw) { return "'" + escape_single(raw) + "'"; }

bool inside(const std::vector<Literal>& lits, std::size_t pos) {
  return std::any_of(lits.begin(), lits.end(),
                     [&](const Literal& l) { return pos + 1 >= l.begin && pos <= l.end; });
}

// A literal with at least `min_len` unescaped characters, chosen uniformly.
std::optional<Literal> pick_literal(std::string_view s, std::size_t min_len, Rng& rng) {
  std::vector<Literal> ok;
  for (const auto& l : single_quoted(s)) {
    if (unescape_single(s.substr(l.begin, l.end - l.begin)).size() >= min_len) ok.push_back(l);
  }
  if (ok.empty()) return std::nullopt;
  return ok[rng.below(ok.size())];
}

// Replaces the quoted literal (quotes included) with `with`.
std::string replace_literal(std::string_view s, const Literal& l, std::string_view with) {
  std::string out(s.substr(0, l.begin - 1));
  out += with;
  out += s.substr(l.end + 1);
  return out;
}

std::string literal_text(std::string_view s, const Literal& l) {
  return unescape_single(s.substr(l.begin, l.end - l.begin));
}

// Splits `s` into `parts` non-empty pieces at random cut points.
std::vector<std::string> split_random(std::string_view s, std::size_t parts, Rng& rng) {
  parts = std::min(parts, s.size());
  std::vector<std::size_t> cuts;
  while (cuts.size() + 1 < parts) {
    const std::size_t c = 1 + static_cast<std::size_t>(rng.below(s.size() - 1));
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::string> out;
  std::size_t prev = 0;
  for (std::size_t c : cuts) {
    out.emplace_back(s.substr(prev, c - prev));
    prev = c;
  }
  out.emplace_back(s.substr(prev));
  return out;
}

Rewrite alternate_case(std::string_view s, Rng& rng) {
  if (std::none_of(s.begin(), s.end(), is_alpha)) return std::nullopt;
  std::string out(s);
  for (char& c : out) {
    if (is_alpha(c)) {
      c = rng.bernoulli(0.5) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                             : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

struct FlagForms {
  std::string_view full;
  std::vector<std::string_view> shorts;
};

const std::vector<FlagForms>& flag_table() {
  static const std::vector<FlagForms> table = {
      {"-noprofile", {"-nop", "-NoP", "-nopr", "-noP"}},
      {"-windowstyle", {"-w", "-W", "-win", "-window"}},
      {"-executionpolicy", {"-ep", "-exec", "-ex", "-Exec"}},
      {"-encodedcommand", {"-e", "-en", "-enc", "-Enc", "-enco"}},
      {"-noninteractive", {"-noni", "-NonI", "-nonin"}},
      {"-command", {"-c", "-C", "-com"}},
      {"-nologo", {"-nol", "-nolog"}},
      {"-file", {"-f", "-fi"}},
      {"-outputformat", {"-o", "-of"}},
  };
  return table;
}

bool flag_boundary(std::string_view s, std::size_t pos) {
  return pos >= s.size() || s[pos] == ' ' || s[pos] == '\t' || s[pos] == '"' || s[pos] == '\'';
}

Rewrite short_flags(std::string_view s, Rng& rng) {
  const std::string low = lower(s);
  std::string out;
  bool changed = false;
  std::size_t i = 0;
  while (i < s.size()) {
    bool replaced = false;
    if (s[i] == '-' && (i == 0 || flag_boundary(s, i - 1))) {
      for (const auto& f : flag_table()) {
        if (low.compare(i, f.full.size(), f.full) == 0 && flag_boundary(s, i + f.full.size())) {
          out += f.shorts[rng.below(f.shorts.size())];
          i += f.full.size();
          replaced = changed = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(s[i++]);
  }
  if (!changed) return std::nullopt;
  return out;
}

Rewrite encoded_command(std::string_view s, Rng& rng) {
  static constexpr std::string_view kPrefixes[] = {
      "powershell -e", "powershell.exe -EncodedCommand", "powershell -nop -w hidden -enc",
      "powershell -NoP -NonI -W Hidden -Exec Bypass -Enc"};
  const std::string_view prefix = kPrefixes[rng.below(std::size(kPrefixes))];
  return std::string(prefix) + " " + text::base64_encode(text::utf8_to_utf16le(s));
}

Rewrite invoke_string(std::string_view s, Rng& rng) {
  // Figure-style rewrite of an object creation when there is one.
  static constexpr std::string_view kNew = "(new-object ";
  const std::string low = lower(s);
  const std::size_t at = low.find(kNew);
  if (at != std::string::npos && rng.bernoulli(0.5)) {
    const std::size_t close = s.find(')', at);
    const std::string_view inner = s.substr(at + 1, close - at - 1);
    if (close != std::string::npos && inner.find('(') == std::string_view::npos &&
        inner.find('"') == std::string_view::npos) {
      return std::string(s.substr(0, at)) + "(Invoke-Expression ((\"" + std::string(inner) +
             "\")))" + std::string(s.substr(close + 1));
    }
  }
  switch (rng.below(3)) {
    case 0:
      return "Invoke-Expression (" + quote(s) + ")";
    case 1:
      return "IEX (" + quote(s) + ")";
    default:
      return "& ([scriptblock]::Create(" + quote(s) + "))";
  }
}

Rewrite char_codes(std::string_view s, Rng& rng) {
  const auto lit = pick_literal(s, 1, rng);
  if (!lit) return std::nullopt;
  const std::string raw = literal_text(s, *lit);
  const std::size_t picks = std::min<std::size_t>(raw.size(), 1 + rng.below(3));
  std::vector<std::size_t> pos;
  while (pos.size() < picks) {
    const std::size_t p = rng.below(raw.size());
    if (std::find(pos.begin(), pos.end(), p) == pos.end()) pos.push_back(p);
  }
  std::sort(pos.begin(), pos.end());
  std::string expr = "(";
  std::size_t prev = 0;
  for (std::size_t p : pos) {
    if (p > prev) expr += quote(raw.substr(prev, p - prev)) + "+";
    expr += "[char]" + std::to_string(static_cast<unsigned char>(raw[p])) + "+";
    prev = p + 1;
  }
  expr += quote(raw.substr(prev)) + ")";
  return replace_literal(s, *lit, expr);
}

Rewrite base64_string(std::string_view s, Rng& rng, bool utf8) {
  const auto lit = pick_literal(s, 1, rng);
  if (!lit) return std::nullopt;
  const std::string raw = literal_text(s, *lit);
  std::string expr;
  if (utf8) {
    const bool ascii = std::all_of(raw.begin(), raw.end(),
                                   [](char c) { return static_cast<unsigned char>(c) < 0x80; });
    const char* enc = ascii && rng.bernoulli(0.3) ? "ASCII" : "UTF8";
    expr = std::string("([System.Text.Encoding]::") + enc +
           ".GetString([System.Convert]::FromBase64String('" + text::base64_encode(raw) + "')))";
  } else {
    expr = "([Text.Encoding]::Unicode.GetString([Convert]::FromBase64String('" +
           text::base64_encode(text::utf8_to_utf16le(raw)) + "')))";
  }
  return replace_literal(s, *lit, expr);
}

Rewrite backticks(std::string_view s, Rng& rng) {
  // Letters whose backtick escape has a meaning: `0 `a `b `e `f `n `r `t `u `v
  static constexpr std::string_view kEscapes = "abefnrtuv";
  const auto lits = single_quoted(s);
  struct Word {
    std::size_t begin, end;
  };
  std::vector<Word> words;
  for (std::size_t i = 0; i < s.size();) {
    if (!is_alpha(s[i]) || (i > 0 && s[i - 1] == '$') || inside(lits, i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_alpha(s[j])) ++j;
    if (j - i >= 4) words.push_back({i, j});
    i = j;
  }
  if (words.empty()) return std::nullopt;
  rng.shuffle(std::span(words));
  words.resize(std::min<std::size_t>(words.size(), 1 + rng.below(3)));
  std::vector<std::size_t> inserts;
  for (const auto& w : words) {
    std::vector<std::size_t> ok;
    for (std::size_t p = w.begin + 1; p < w.end; ++p) {
      const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[p])));
      if (kEscapes.find(c) == std::string_view::npos) ok.push_back(p);
    }
    if (!ok.empty()) inserts.push_back(ok[rng.below(ok.size())]);
  }
  if (inserts.empty()) return std::nullopt;
  std::sort(inserts.begin(), inserts.end());
  std::string out;
  std::size_t prev = 0;
  for (std::size_t p : inserts) {
    out += s.substr(prev, p - prev);
    out += '`';
    prev = p;
  }
  out += s.substr(prev);
  return out;
}

Rewrite string_manipulation(std::string_view s, Rng& rng) {
  const auto lit = pick_literal(s, 2, rng);
  if (!lit) return std::nullopt;
  const std::string raw = literal_text(s, *lit);
  if (rng.bernoulli(0.5)) {
    const auto parts = split_random(raw, 2 + rng.below(2), rng);
    std::string expr = "(";
    for (std::size_t i = 0; i < parts.size(); ++i) expr += (i ? "+" : "") + quote(parts[i]);
    return replace_literal(s, *lit, expr + ")");
  }
  static constexpr std::string_view kMarkers[] = {"~", "#", "^", "{0}", "!!", "%%", "@@"};
  std::vector<std::string_view> markers;
  for (auto m : kMarkers) {
    if (raw.find(m) == std::string::npos) markers.push_back(m);
  }
  std::vector<char> candidates;
  for (char c : raw) {
    if (c != '\'' && std::find(candidates.begin(), candidates.end(), c) == candidates.end()) {
      candidates.push_back(c);
    }
  }
  if (markers.empty() || candidates.empty()) return std::nullopt;
  const std::string marker(markers[rng.below(markers.size())]);
  const char target = candidates[rng.below(candidates.size())];
  std::string masked;
  for (char c : raw) {
    if (c == target) {
      masked += marker;
    } else {
      masked.push_back(c);
    }
  }
  return replace_literal(s, *lit,
                         "(" + quote(masked) + ".Replace(" + quote(marker) + "," +
                             quote(std::string(1, target)) + "))");
}

// Cmdlet-looking tokens: Verb-Noun or the iex alias.
std::optional<std::pair<std::size_t, std::size_t>> pick_cmdlet(std::string_view s, Rng& rng) {
  const auto lits = single_quoted(s);
  std::vector<std::pair<std::size_t, std::size_t>> found;
  for (std::size_t i = 0; i < s.size();) {
    if (!is_alpha(s[i]) || (i > 0 && (is_ident(s[i - 1]) || s[i - 1] == '$' || s[i - 1] == '-' ||
                                      s[i - 1] == '.' || s[i - 1] == ':')) ||
        inside(lits, i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (is_ident(s[j]) || s[j] == '-')) ++j;
    const std::string tok = lower(s.substr(i, j - i));
    const auto dash = tok.find('-');
    const bool verb_noun = dash != std::string::npos && dash > 0 && dash + 1 < tok.size() &&
                           tok.find('-', dash + 1) == std::string::npos;
    if (verb_noun || tok == "iex") found.emplace_back(i, j);
    i = j;
  }
  if (found.empty()) return std::nullopt;
  return found[rng.below(found.size())];
}

Rewrite inline_variables(std::string_view s, Rng& rng) {
  std::string piece_source;
  std::string prefix_target;
  std::size_t begin = 0, end = 0;
  bool is_literal = false;
  if (const auto lit = pick_literal(s, 2, rng)) {
    piece_source = literal_text(s, *lit);
    begin = lit->begin - 1;
    end = lit->end + 1;
    is_literal = true;
  } else if (const auto tok = pick_cmdlet(s, rng)) {
    piece_source = std::string(s.substr(tok->first, tok->second - tok->first));
    begin = tok->first;
    end = tok->second;
  } else {
    return std::nullopt;
  }
  const auto parts = split_random(piece_source, 2 + rng.below(3), rng);
  std::vector<std::string> names;
  const std::string low = lower(s);
  while (names.size() < parts.size()) {
    std::string n = random_name(rng, 5, 7);
    if (std::find(names.begin(), names.end(), n) == names.end() &&
        low.find("$" + n) == std::string::npos) {
      names.push_back(std::move(n));
    }
  }
  std::vector<std::size_t> order(parts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span(order));
  std::string out;
  for (std::size_t i : order) out += "$" + names[i] + "=" + quote(parts[i]) + "; ";
  std::string expr = "(";
  for (std::size_t i = 0; i < names.size(); ++i) expr += (i ? "+$" : "$") + names[i];
  expr += is_literal ? "+'')" : ")";
  out += s.substr(0, begin);
  out += is_literal ? expr : "&" + expr;
  out += s.substr(end);
  return out;
}

Rewrite rename_variable(std::string_view s, Rng& rng) {
  static const std::vector<std::string> kKeepEnv = {
      "temp", "tmp", "appdata", "localappdata", "userprofile", "windir", "systemroot",
      "programdata", "public", "computername", "username", "psmodulepath", "path", "programfiles"};
  static const std::vector<std::string> kKeepVar = {"_", "true", "false", "null", "env", "args",
                                                    "this", "input", "psscriptroot", "home", "pid",
                                                    "host", "error", "profile"};
  struct Ref {
    std::size_t begin, end;  // name range
    std::string key;         // lowercased, "env:" prefixed for environment names
  };
  std::vector<Ref> refs;
  const std::string low = lower(s);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] != '$') continue;
    std::size_t j = i + 1;
    const bool env = low.compare(j, 4, "env:") == 0;
    if (env) j += 4;
    const std::size_t begin = j;
    while (j < s.size() && is_ident(s[j])) ++j;
    if (j == begin) continue;
    const std::string name = low.substr(begin, j - begin);
    const auto& keep = env ? kKeepEnv : kKeepVar;
    if (std::find(keep.begin(), keep.end(), name) != keep.end()) continue;
    refs.push_back({begin, j, (env ? "env:" : "") + name});
  }
  if (refs.empty()) return std::nullopt;
  std::vector<std::string> keys;
  for (const auto& r : refs) {
    if (std::find(keys.begin(), keys.end(), r.key) == keys.end()) keys.push_back(r.key);
  }
  const std::string key = keys[rng.below(keys.size())];
  std::string fresh;
  do {
    fresh = random_name(rng, 4, 8);
  } while (low.find(fresh) != std::string::npos);
  std::string out;
  std::size_t prev = 0;
  for (const auto& r : refs) {
    if (r.key != key) continue;
    out += s.substr(prev, r.begin - prev);
    out += fresh;
    prev = r.end;
  }
  out += s.substr(prev);
  return out;
}

}  // namespace

std::string_view obfuscation_name(int method) {
  static constexpr std::string_view kNames[] = {"alternating case",
                                                "short flags",
                                                "encoded command",
                                                "invoke expression string",
                                                "char codes",
                                                "base64 string",
                                                "utf8 base64 string",
                                                "backticks",
                                                "string manipulation",
                                                "inline variable concatenation",
                                                "random variable name"};
  if (method < 1 || method > kObfuscationMethods) {
    throw std::invalid_argument("obfuscation method must be in 1..11, got " + std::to_string(method));
  }
  return kNames[method - 1];
}

std::optional<std::string> apply_obfuscation(int method, std::string_view cmd, Rng& rng) {
  obfuscation_name(method);  // validates the id
  if (cmd.empty()) return std::nullopt;
  Rewrite out;
  switch (method) {
    case 1: out = alternate_case(cmd, rng); break;
    case 2: out = short_flags(cmd, rng); break;
    case 3: out = encoded_command(cmd, rng); break;
    case 4: out = invoke_string(cmd, rng); break;
    case 5: out = char_codes(cmd, rng); break;
    case 6: out = base64_string(cmd, rng, false); break;
    case 7: out = base64_string(cmd, rng, true); break;
    case 8: out = backticks(cmd, rng); break;
    case 9: out = string_manipulation(cmd, rng); break;
    case 10: out = inline_variables(cmd, rng); break;
    default: out = rename_variable(cmd, rng); break;
  }
  if (out) std::replace_if(out->begin(), out->end(), [](char c) { return c == '\n' || c == '\r'; }, ' ');
  return out;
}

}  // namespace pshield
