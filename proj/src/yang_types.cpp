#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>

#include "orc/error.hpp"
#include "orc/yang.hpp"

namespace orc::yang {

namespace {

constexpr __int128 pow10(int n) {
  __int128 v = 1;
  for (int i = 0; i < n; ++i) v *= 10;
  return v;
}

constexpr __int128 kScale = pow10(Number::kScaleDigits);

std::string to_decimal(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

Interval length_bounds() {
  return {Number::from_integer(0), Number::from_integer(std::numeric_limits<std::uint64_t>::max())};
}

std::vector<Interval> merge(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.min < b.min; });
  std::vector<Interval> out;
  for (const auto& i : v) {
    if (!out.empty() && i.min <= out.back().max) {
      out.back().max = std::max(out.back().max, i.max);
    } else {
      out.push_back(i);
    }
  }
  return out;
}

TypeSpec apply_restrictions(const TypeDecl& decl, TypeSpec spec) {
  const auto fail = [&](const std::string& why) { throw SyntaxError(decl.line, why); };
  if (decl.fraction_digits) {
    if (spec.base != Base::decimal64) fail("fraction-digits is only valid for decimal64");
    if (spec.fraction_digits) fail("fraction-digits cannot be changed by a derived type");
    if (*decl.fraction_digits < 1 || *decl.fraction_digits > 18) fail("fraction-digits must be 1..18");
    spec.fraction_digits = decl.fraction_digits;
  }
  if (spec.base == Base::decimal64 && !spec.fraction_digits) fail("decimal64 requires fraction-digits");

  if (!decl.patterns.empty()) {
    if (spec.base != Base::string) fail("pattern is only valid for string types");
    spec.patterns.insert(spec.patterns.end(), decl.patterns.begin(), decl.patterns.end());
  }
  if (decl.range) {
    if (!is_numeric_base(spec.base)) fail("range is only valid for numeric types");
    const auto current = spec.range.empty() ? std::vector<Interval>{base_bounds(spec.base, spec.fraction_digits)}
                                            : spec.range;
    std::vector<Interval> parsed;
    try {
      parsed = parse_intervals(*decl.range, current, spec.fraction_digits);
    } catch (const SyntaxError& e) {
      fail(e.reason());
    }
    spec.range = intersect(current, parsed);
    if (spec.range.empty()) fail("range '" + *decl.range + "' leaves no valid values");
  }
  if (decl.length) {
    if (spec.base != Base::string) fail("length is only valid for string types");
    const auto current = spec.length.empty() ? std::vector<Interval>{length_bounds()} : spec.length;
    std::vector<Interval> parsed;
    try {
      parsed = parse_intervals(*decl.length, current);
    } catch (const SyntaxError& e) {
      fail(e.reason());
    }
    for (const auto& i : parsed)
      if (!i.min.is_integer() || !i.max.is_integer()) fail("length bounds must be integers");
    spec.length = intersect(current, parsed);
    if (spec.length.empty()) fail("length '" + *decl.length + "' leaves no valid values");
  }
  if (!decl.enums.empty()) {
    if (spec.base != Base::enumeration) fail("enum is only valid for enumeration types");
    if (!spec.enums.empty()) {
      for (const auto& e : decl.enums)
        if (std::find(spec.enums.begin(), spec.enums.end(), e) == spec.enums.end())
          fail("enum '" + e + "' is not in the base enumeration");
    }
    spec.enums = decl.enums;
  }
  if (spec.base == Base::enumeration && spec.enums.empty()) fail("enumeration requires at least one enum");
  return spec;
}

TypeSpec resolve_impl(const ModelSet& imports, const Module& context, std::string_view name, int depth) {
  if (depth > 32) throw UnknownType(std::string(name) + " (typedef chain too deep or cyclic)");
  if (const auto colon = name.find(':'); colon != std::string_view::npos) {
    const auto prefix = name.substr(0, colon);
    const auto local = name.substr(colon + 1);
    if (prefix == context.prefix) return resolve_impl(imports, context, local, depth + 1);
    for (const auto& imp : context.imports) {
      if (imp.prefix != prefix) continue;
      const Module* target = find_module(imports, imp.module);
      if (!target) throw UnknownType(std::string(name) + " (module '" + imp.module + "' not available)");
      return resolve_impl(imports, *target, local, depth + 1);
    }
    throw UnknownType(std::string(name));
  }
  if (auto base = base_from_string(name)) return TypeSpec{*base, {}, {}, {}, {}, std::nullopt};
  if (auto it = context.type_decls.find(std::string(name)); it != context.type_decls.end()) {
    const auto parent = resolve_impl(imports, context, it->second.base_ref, depth + 1);
    return apply_restrictions(it->second, parent);
  }
  if (auto it = context.typedefs.find(std::string(name)); it != context.typedefs.end()) return it->second;
  throw UnknownType(std::string(name));
}

void resolve_leaf_refs(Node& node, Module& module, const ModelSet& imports) {
  if (node.kind == NodeKind::leaf || node.kind == NodeKind::leaf_list) {
    auto& ref = node.type_ref;
    if (auto base = base_from_string(ref)) {
      if (*base == Base::decimal64) throw SyntaxError(node.line, "decimal64 requires fraction-digits");
      if (*base == Base::enumeration) throw SyntaxError(node.line, "enumeration requires at least one enum");
    } else if (const auto colon = ref.find(':'); colon != std::string::npos) {
      const auto prefix = ref.substr(0, colon);
      const auto local = ref.substr(colon + 1);
      if (prefix == module.prefix) {
        ref = local;
        if (!base_from_string(ref) && !module.typedefs.count(ref)) throw UnknownType(ref);
      } else {
        auto spec = resolve_type(imports, module, ref);
        const auto imp = std::find_if(module.imports.begin(), module.imports.end(),
                                      [&](const Import& i) { return i.prefix == prefix; });
        ref = imp->module + ":" + local;
        module.typedefs[ref] = std::move(spec);
      }
    } else if (!module.typedefs.count(ref)) {
      throw UnknownType(ref);
    }
  }
  for (auto& c : node.children) resolve_leaf_refs(c, module, imports);
}

}  // namespace

Number Number::from_integer(__int128 v) { return Number(v * kScale); }

std::optional<Number> Number::parse(std::string_view text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
  const std::size_t int_start = i;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
  if (i == int_start) return std::nullopt;
  auto int_digits = text.substr(int_start, i - int_start);
  while (int_digits.size() > 1 && int_digits.front() == '0') int_digits.remove_prefix(1);
  if (int_digits.size() > 20) return std::nullopt;
  std::string_view frac_digits;
  if (i < text.size() && text[i] == '.') {
    const std::size_t frac_start = ++i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
    if (i == frac_start) return std::nullopt;
    frac_digits = text.substr(frac_start, i - frac_start);
    if (frac_digits.size() > static_cast<std::size_t>(kScaleDigits)) return std::nullopt;
  }
  if (i != text.size()) return std::nullopt;

  __int128 whole = 0;
  for (char c : int_digits) whole = whole * 10 + (c - '0');
  __int128 frac = 0;
  for (char c : frac_digits) frac = frac * 10 + (c - '0');
  frac *= pow10(kScaleDigits - static_cast<int>(frac_digits.size()));
  const __int128 raw = whole * kScale + frac;
  return Number(negative ? -raw : raw);
}

std::string Number::str() const {
  const bool negative = raw_ < 0;
  const unsigned __int128 mag = negative ? static_cast<unsigned __int128>(-(raw_ + 1)) + 1
                                         : static_cast<unsigned __int128>(raw_);
  std::string out = negative ? "-" : "";
  out += to_decimal(mag / static_cast<unsigned __int128>(kScale));
  auto frac = mag % static_cast<unsigned __int128>(kScale);
  if (frac != 0) {
    auto digits = to_decimal(frac);
    digits.insert(0, static_cast<std::size_t>(kScaleDigits) - digits.size(), '0');
    while (digits.back() == '0') digits.pop_back();
    out += "." + digits;
  }
  return out;
}

int Number::fraction_digits() const {
  const auto s = str();
  const auto dot = s.find('.');
  return dot == std::string::npos ? 0 : static_cast<int>(s.size() - dot - 1);
}

namespace {
struct BaseName {
  Base base;
  std::string_view name;
};
constexpr std::array<BaseName, 12> kBaseNames{{
    {Base::string, "string"},
    {Base::boolean, "boolean"},
    {Base::int8, "int8"},
    {Base::int16, "int16"},
    {Base::int32, "int32"},
    {Base::int64, "int64"},
    {Base::uint8, "uint8"},
    {Base::uint16, "uint16"},
    {Base::uint32, "uint32"},
    {Base::uint64, "uint64"},
    {Base::decimal64, "decimal64"},
    {Base::enumeration, "enumeration"},
}};
}  // namespace

std::string_view to_string(Base base) {
  for (const auto& b : kBaseNames)
    if (b.base == base) return b.name;
  return "?";
}

std::optional<Base> base_from_string(std::string_view name) {
  for (const auto& b : kBaseNames)
    if (b.name == name) return b.base;
  return std::nullopt;
}

bool is_integer_base(Base base) {
  switch (base) {
    case Base::int8:
    case Base::int16:
    case Base::int32:
    case Base::int64:
    case Base::uint8:
    case Base::uint16:
    case Base::uint32:
    case Base::uint64: return true;
    default: return false;
  }
}

bool is_numeric_base(Base base) { return is_integer_base(base) || base == Base::decimal64; }

bool is_string_encoded(Base base) {
  return base == Base::int64 || base == Base::uint64 || base == Base::decimal64;
}

Interval base_bounds(Base base, std::optional<int> fraction_digits) {
  const auto ints = [](__int128 lo, __int128 hi) { return Interval{Number::from_integer(lo), Number::from_integer(hi)}; };
  switch (base) {
    case Base::int8: return ints(INT8_MIN, INT8_MAX);
    case Base::int16: return ints(INT16_MIN, INT16_MAX);
    case Base::int32: return ints(INT32_MIN, INT32_MAX);
    case Base::int64: return ints(INT64_MIN, INT64_MAX);
    case Base::uint8: return ints(0, UINT8_MAX);
    case Base::uint16: return ints(0, UINT16_MAX);
    case Base::uint32: return ints(0, UINT32_MAX);
    case Base::uint64: return ints(0, UINT64_MAX);
    case Base::decimal64: {
      const int fd = fraction_digits.value_or(1);
      const auto scale = pow10(fd);
      // INT64_MIN / 10^fd, exactly: parse the textual form.
      const auto bound = [&](__int128 v) {
        const bool neg = v < 0;
        const auto mag = neg ? -v : v;
        auto digits = to_decimal(static_cast<unsigned __int128>(mag / scale)) + "." ;
        auto frac = to_decimal(static_cast<unsigned __int128>(mag % scale));
        frac.insert(0, static_cast<std::size_t>(fd) - frac.size(), '0');
        return *Number::parse((neg ? "-" : "") + digits + frac);
      };
      return Interval{bound(INT64_MIN), bound(INT64_MAX)};
    }
    default: return length_bounds();
  }
}

std::vector<Interval> parse_intervals(std::string_view text, const std::vector<Interval>& parent,
                                      std::optional<int> fraction_digits) {
  if (parent.empty()) throw SyntaxError(0, "restriction on an empty value space");
  const Number lowest = parent.front().min;
  const Number highest = parent.back().max;
  const auto bound = [&](std::string_view t) -> Number {
    t = trim(t);
    if (t == "min") return lowest;
    if (t == "max") return highest;
    auto n = Number::parse(t);
    if (!n) throw SyntaxError(0, "invalid bound '" + std::string(t) + "'");
    if (fraction_digits && n->fraction_digits() > *fraction_digits)
      throw SyntaxError(0, "bound '" + std::string(t) + "' exceeds fraction-digits");
    return *n;
  };

  std::vector<Interval> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto bar = text.find('|', start);
    if (bar == std::string_view::npos) bar = text.size();
    const auto part = trim(text.substr(start, bar - start));
    start = bar + 1;
    if (part.empty()) throw SyntaxError(0, "empty range part in '" + std::string(text) + "'");
    Interval iv;
    if (const auto dots = part.find(".."); dots != std::string_view::npos) {
      iv = {bound(part.substr(0, dots)), bound(part.substr(dots + 2))};
    } else {
      iv.min = iv.max = bound(part);
    }
    if (iv.max < iv.min) throw SyntaxError(0, "descending range part '" + std::string(part) + "'");
    if (!out.empty() && iv.min <= out.back().max)
      throw SyntaxError(0, "range parts must be disjoint and ascending in '" + std::string(text) + "'");
    out.push_back(iv);
  }
  return out;
}

std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<Interval> out;
  for (const auto& x : a) {
    for (const auto& y : b) {
      const auto lo = std::max(x.min, y.min);
      const auto hi = std::min(x.max, y.max);
      if (lo <= hi) out.push_back({lo, hi});
    }
  }
  return merge(std::move(out));
}

TypeSpec resolve_type(const ModelSet& imports, const Module& context, std::string_view name) {
  return resolve_impl(imports, context, name, 0);
}

void resolve_types(Module& module, const ModelSet& imports) {
  for (const auto& [name, decl] : module.type_decls) {
    (void)decl;
    module.typedefs[name] = resolve_type(imports, module, name);
  }
  resolve_leaf_refs(module.root, module, imports);
}

TypeSpec leaf_type(const Module& module, const Node& leaf) {
  if (auto base = base_from_string(leaf.type_ref)) return TypeSpec{*base, {}, {}, {}, {}, std::nullopt};
  if (auto it = module.typedefs.find(leaf.type_ref); it != module.typedefs.end()) return it->second;
  throw UnknownType(leaf.type_ref);
}

}  // namespace orc::yang
