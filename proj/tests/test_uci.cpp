#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <random>
#include <set>
#include <thread>

#include "orc/error.hpp"
#include "orc/uci.hpp"
#include "support.hpp"

using namespace orc;
using namespace orc::uci;
using orc::test::TempDir;

namespace {

const char* kSample = R"(config system
    option hostname "OpenWrt"
    option timezone "UTC"
    # ...

config interface "en0"
    option ip6addr "2001:db8::42/64"
    option ip6gw   "2001:db8::1"
    # ...

config vnstat
    list interface "en0"
    list interface "en1"
    # ...
)";

// Random document together with two renderings produced independently of
// serialize(): the canonical text and a hand-written variant that uses other
// quoting styles, indentation and comments.
struct Generated {
  Document doc;
  std::string canonical;
  std::string messy;
};

std::string single_quoted(const std::string& s) { return "'" + s + "'"; }

std::string double_quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string bare(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\'' || c == '"' || c == '\\' || c == '#') out += '\\';
    out += c;
  }
  return out;
}

Generated generate(std::mt19937& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const std::string ident = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
  const std::string value_chars = ident + " -.:/#\"\\@$%&()";
  auto word = [&](const std::string& alphabet, int max) {
    std::string s;
    const int n = pick(1, max);
    for (int i = 0; i < n; ++i) s += alphabet[pick(0, static_cast<int>(alphabet.size()) - 1)];
    return s;
  };
  auto quoted = [&](const std::string& s) {
    switch (pick(0, 2)) {
      case 0: return single_quoted(s);
      case 1: return double_quoted(s);
      default: return bare(s);
    }
  };

  Generated g;
  std::set<std::pair<std::string, std::string>> names;
  const int sections = pick(0, 6);
  if (pick(0, 1)) g.messy += "# leading comment\n\n";
  for (int i = 0; i < sections; ++i) {
    Section s;
    s.type = pick(0, 3) == 0 ? word(ident, 4) + "-" + word(ident, 3) : word(ident, 8);
    if (pick(0, 1)) {
      std::string name;
      do name = word(ident, 8);
      while (!names.insert({s.type, name}).second);
      s.name = name;
    }
    g.canonical += "config " + s.type + (s.name ? " " + single_quoted(*s.name) : "") + "\n";
    g.messy += "config " + s.type + (s.name ? " " + quoted(*s.name) : "") + (pick(0, 2) == 0 ? "  # note" : "") + "\n";
    std::set<std::string> options;
    const int entries = pick(0, 5);
    for (int e = 0; e < entries; ++e) {
      const bool is_list = pick(0, 2) == 0;
      std::string name = word(ident, 6);
      if (is_list ? options.count(name) > 0 : s.has_entry(name)) continue;
      if (!is_list) options.insert(name);
      const auto value = word(value_chars, 12);
      s.entries.push_back(Entry{is_list ? EntryKind::list : EntryKind::option, name, value});
      const char* kw = is_list ? "list" : "option";
      g.canonical += std::string("\t") + kw + " " + name + " " + single_quoted(value) + "\n";
      g.messy += std::string(pick(0, 1) ? "\t" : "    ") + kw + " " + name + "   " + quoted(value) + "\n";
      if (pick(0, 4) == 0) g.messy += "  # comment line\n";
    }
    g.canonical += "\n";
    g.messy += pick(0, 1) ? "\n" : "\n\n";
    g.doc.sections.push_back(std::move(s));
  }
  return g;
}

}  // namespace

TEST_CASE("sample configuration parses into three sections") {
  const auto doc = parse(kSample, "demo");
  REQUIRE(doc.sections.size() == 3);
  CHECK(doc.sections[0].type == "system");
  CHECK_FALSE(doc.sections[0].name);
  CHECK(doc.sections[0].entries.size() == 2);
  CHECK(doc.sections[0].find_option("hostname")->value == "OpenWrt");
  CHECK(doc.sections[1].type == "interface");
  CHECK(doc.sections[1].name == std::optional<std::string>("en0"));
  CHECK(doc.sections[1].entries.size() == 2);
  CHECK(doc.sections[1].find_option("ip6gw")->value == "2001:db8::1");
  CHECK(doc.sections[2].type == "vnstat");
  CHECK(doc.sections[2].list_values("interface") == std::vector<std::string>{"en0", "en1"});
}

TEST_CASE("serializer canonical forms") {
  CHECK(parse("").sections.empty());
  Document d{"p", {Section{"system", std::nullopt, {}}}};
  CHECK(serialize(d) == "config system\n\n");

  const auto sample = parse(kSample);
  const auto text = serialize(sample);
  CHECK(text.find("\toption ip6gw '2001:db8::1'\n") != std::string::npos);
  CHECK(text.find("config interface 'en0'\n") != std::string::npos);
  CHECK(parse(text) == sample);
}

TEST_CASE("parser rejects malformed input") {
  CHECK_THROWS_AS(parse("bogus x\n"), SyntaxError);
  CHECK_THROWS_AS(parse("option a 'b'\n"), SyntaxError);
  CHECK_THROWS_AS(parse("config s\n\toption a\n"), SyntaxError);
  CHECK_THROWS_AS(parse("config s\n\toption a ''\n"), SyntaxError);
  CHECK_THROWS_AS(parse("config s\n\toption a-b 'x'\n"), SyntaxError);
  CHECK_THROWS_AS(parse("config s 'a-b'\n"), SyntaxError);
  CHECK_THROWS_AS(parse("config s x\nconfig s x\n"), SyntaxError);
  CHECK_THROWS_AS(parse("config s\n\toption a 'unterminated\n"), SyntaxError);
  try {
    parse("config s\n\n\tbad a 'b'\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("canonical text matches an independent generator over 50 documents") {
  std::mt19937 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto g = generate(rng);
    CAPTURE(g.messy);
    const auto parsed = parse(g.messy);
    CHECK(parsed == g.doc);
    CHECK(serialize(parsed) == g.canonical);
    CHECK(serialize(parse(g.canonical)) == g.canonical);
  }
}

TEST_CASE("parse inverts serialize and canonicalization is idempotent") {
  std::mt19937 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto g = generate(rng);
    CHECK(parse(serialize(g.doc)) == g.doc);
    const auto once = serialize(parse(g.messy));
    CHECK(serialize(parse(once)) == once);
  }
}

TEST_CASE("store reads: missing package, counts and values") {
  TempDir dir;
  Store store(dir.path());
  CHECK(store.count_sections("example", "interfaces") == 0);
  CHECK_FALSE(store.read_value(Path{"example", "device", "device", {}, "name"}));

  const FlattenedEntry entries[] = {
      {Path{"example", "device", "device", {}, {}}, FlatKind::container, {}, "example.device"},
      {Path{"example", "device", "device", {}, "name"}, FlatKind::option, "Router_0", "example.device.name"},
      {Path{"example", "interfaces", {}, 0, "name"}, FlatKind::option, "eth0", ""},
      {Path{"example", "interfaces", {}, 0, "enabled"}, FlatKind::option, "true", ""},
      {Path{"example", "device", "device", {}, "applications"}, FlatKind::list, "uhttpd", ""},
      {Path{"example", "device", "device", {}, "applications"}, FlatKind::list, "luci", ""},
  };
  const auto report = store.apply_changes(entries, ApplyMode::create);
  CHECK(report.packages == std::vector<std::string>{"example"});
  CHECK(report.sections_created == 2);

  CHECK(store.count_sections("example", "interfaces") == 1);
  CHECK(store.read_value(Path{"example", "interfaces", {}, 0, "name"}) == std::optional<Value>(std::string("eth0")));
  CHECK(store.read_value(Path{"example", "device", "device", {}, "applications"}) ==
        std::optional<Value>(std::vector<std::string>{"uhttpd", "luci"}));
  CHECK_FALSE(store.read_value(Path{"example", "device", "device", {}, "nothing"}));
  CHECK(test::read_file(dir.path() / "example") ==
        "config device 'device'\n\toption name 'Router_0'\n\tlist applications 'uhttpd'\n"
        "\tlist applications 'luci'\n\nconfig interfaces\n\toption name 'eth0'\n\toption enabled 'true'\n\n");

  SUBCASE("create conflicts") {
    const FlattenedEntry again[] = {entries[0]};
    CHECK_THROWS_AS(store.apply_changes(again, ApplyMode::create), ConflictError);
    const FlattenedEntry option[] = {entries[1]};
    CHECK_THROWS_AS(store.apply_changes(option, ApplyMode::create), ConflictError);
  }
  SUBCASE("ambiguous anonymous reads") {
    const FlattenedEntry more[] = {{Path{"example", "interfaces", {}, 1, "name"}, FlatKind::option, "eth1", ""}};
    store.apply_changes(more, ApplyMode::create);
    CHECK_THROWS_AS(store.read_value(Path{"example", "interfaces", {}, {}, "name"}), AmbiguousPath);
  }
  SUBCASE("index beyond the next free position") {
    const FlattenedEntry gap[] = {{Path{"example", "interfaces", {}, 5, "name"}, FlatKind::option, "x", ""}};
    CHECK_THROWS_AS(store.apply_changes(gap, ApplyMode::create), NotFound);
  }
  SUBCASE("unstorable values are refused") {
    const FlattenedEntry quote[] = {{Path{"example", "device", "device", {}, "x"}, FlatKind::option, "it's", ""}};
    CHECK_THROWS_AS(store.apply_changes(quote, ApplyMode::replace), UnsupportedValue);
  }
  SUBCASE("replace clears entries and section types") {
    const ClearOp clear[] = {{ClearOp::Kind::entry, Path{"example", "device", "device", {}, "applications"}},
                             {ClearOp::Kind::all_of_type, Path{"example", "interfaces", {}, {}, {}}}};
    const FlattenedEntry one[] = {entries[4]};
    store.apply_changes(one, ApplyMode::replace, clear);
    CHECK(store.count_sections("example", "interfaces") == 0);
    CHECK(store.read_value(entries[4].path) == std::optional<Value>(std::vector<std::string>{"uhttpd"}));
  }
}

TEST_CASE("empty change list leaves the store untouched") {
  TempDir dir;
  Store store(dir.path());
  const auto report = store.apply_changes({}, ApplyMode::create);
  CHECK(report.empty());
  CHECK_FALSE(std::filesystem::exists(dir.path() / "example"));
}

TEST_CASE("apply then read back returns every written value (100 random lists)") {
  std::mt19937 rng(3);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (int round = 0; round < 100; ++round) {
    TempDir dir;
    Store store(dir.path());
    std::vector<FlattenedEntry> entries;
    std::map<std::string, Value> expected;  // keyed by Path::str()
    std::map<std::string, std::size_t> anon_count;
    const int n = pick(1, 25);
    for (int i = 0; i < n; ++i) {
      const std::string package = "pkg" + std::to_string(pick(0, 1));
      Path p{package, "", {}, {}, {}};
      if (pick(0, 1)) {
        p.section_type = "named";
        p.section_name = "n" + std::to_string(pick(0, 2));
        entries.push_back({p, FlatKind::container, {}, ""});
      } else {
        p.section_type = "anon";
        auto& count = anon_count[package];
        p.index = static_cast<std::size_t>(pick(0, static_cast<int>(count)));
        if (*p.index == count) ++count;
      }
      p.option = "o" + std::to_string(pick(0, 3));
      const auto value = "v" + std::to_string(pick(0, 999));
      const bool list = pick(0, 1) == 1;
      const auto key = p.str();
      auto it = expected.find(key);
      if (it != expected.end() && std::holds_alternative<std::string>(it->second) == list) continue;
      if (list) {
        if (it == expected.end()) it = expected.emplace(key, std::vector<std::string>{}).first;
        std::get<std::vector<std::string>>(it->second).push_back(value);
      } else {
        expected[key] = value;
      }
      entries.push_back({p, list ? FlatKind::list : FlatKind::option, value, ""});
    }
    store.apply_changes(entries, ApplyMode::create);
    Store fresh(dir.path());
    for (const auto& e : entries) {
      if (e.kind == FlatKind::container) continue;
      CAPTURE(e.path.str());
      CHECK(fresh.read_value(e.path) == std::optional<Value>(expected.at(e.path.str())));
    }
  }
}

TEST_CASE("delete_at removes options, sections and section types") {
  TempDir dir;
  Store store(dir.path());
  test::write_file(dir.path() / "example",
                   "config device 'device'\n\toption name 'r'\n\nconfig interfaces\n\toption name 'a'\n\n"
                   "config interfaces\n\toption name 'b'\n\n");
  CHECK_THROWS_AS(store.delete_at(Path{"example", "device", "device", {}, "missing"}), NotFound);
  CHECK(store.delete_at(Path{"example", "interfaces", {}, 0, {}}) == 1);
  CHECK(store.count_sections("example", "interfaces") == 1);
  CHECK(store.read_value(Path{"example", "interfaces", {}, 0, "name"}) == std::optional<Value>(std::string("b")));
  CHECK(store.delete_at(Path{"example", "device", "device", {}, {}}) == 1);
  CHECK_FALSE(store.read_value(Path{"example", "device", "device", {}, "name"}));
  CHECK(store.delete_at(Path{"example", "interfaces", {}, {}, {}}) == 1);
  CHECK_THROWS_AS(store.delete_at(Path{"example", "interfaces", {}, {}, {}}), NotFound);
}

TEST_CASE("anonymous indices follow file order after commits") {
  TempDir dir;
  Store store(dir.path());
  for (int i = 0; i < 5; ++i) {
    const FlattenedEntry e[] = {{Path{"p", "t", {}, static_cast<std::size_t>(i), "v"}, FlatKind::option,
                                 std::to_string(i), ""}};
    store.apply_changes(e, ApplyMode::create);
  }
  store.delete_at(Path{"p", "t", {}, 2, {}});
  const auto doc = store.load("p");
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(store.read_value(Path{"p", "t", {}, i, "v"}) ==
          std::optional<Value>(doc.find_indexed("t", i)->find_option("v")->value));
}

TEST_CASE("writer lock: sequential writers and timeout against another process") {
  TempDir dir;
  Store store(dir.path(), std::chrono::milliseconds(200));
  CHECK(store.with_writer_lock([] { return 1; }) == 1);
  CHECK(store.with_writer_lock([] { return 2; }) == 2);

  int ready[2];
  REQUIRE(::pipe(ready) == 0);
  const pid_t pid = ::fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    ::close(ready[0]);
    Store holder(dir.path());
    holder.with_writer_lock([&] {
      char c = 'x';
      (void)!::write(ready[1], &c, 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(1500));
      return 0;
    });
    ::_exit(0);
  }
  ::close(ready[1]);
  char c;
  REQUIRE(::read(ready[0], &c, 1) == 1);
  const auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(store.with_writer_lock([] { return 0; }), LockTimeout);
  const auto waited = std::chrono::steady_clock::now() - start;
  CHECK(waited >= std::chrono::milliseconds(200));
  int status = 0;
  ::waitpid(pid, &status, 0);
  ::close(ready[0]);
  CHECK(store.with_writer_lock([] { return 3; }) == 3);
}

TEST_CASE("20 concurrent writers each append one section") {
  TempDir dir;
  std::vector<pid_t> children;
  for (int i = 0; i < 20; ++i) {
    const pid_t pid = ::fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
      Store store(dir.path(), std::chrono::seconds(30));
      int code = 1;
      try {
        store.with_writer_lock([&] {
          const auto n = store.count_sections("stress", "item");
          const FlattenedEntry e[] = {
              {Path{"stress", "item", {}, n, "writer"}, FlatKind::option, std::to_string(i), ""}};
          store.apply_changes(e, ApplyMode::create);
        });
        code = 0;
      } catch (...) {
      }
      ::_exit(code);
    }
    children.push_back(pid);
  }
  for (auto pid : children) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    CHECK((WIFEXITED(status) && WEXITSTATUS(status) == 0));
  }
  Store store(dir.path());
  const auto doc = parse(test::read_file(dir.path() / "stress"));
  CHECK(doc.count("item") == 20);
  std::set<std::string> writers;
  for (const auto& s : doc.sections) writers.insert(s.find_option("writer")->value);
  CHECK(writers.size() == 20);
}

TEST_CASE("a failure before rename leaves the previous file intact") {
  TempDir dir;
  Store store(dir.path());
  const FlattenedEntry first[] = {{Path{"p", "s", "a", {}, "o"}, FlatKind::option, "1", ""}};
  store.apply_changes(first, ApplyMode::create);
  const auto before = test::read_file(dir.path() / "p");

  store.before_rename = [](const std::filesystem::path&) { throw std::runtime_error("injected"); };
  const FlattenedEntry second[] = {{Path{"p", "s", "a", {}, "o"}, FlatKind::option, "2", ""}};
  CHECK_THROWS(store.apply_changes(second, ApplyMode::replace));
  CHECK_THROWS(store.delete_at(Path{"p", "s", "a", {}, {}}));
  CHECK(test::read_file(dir.path() / "p") == before);
  for (const auto& e : std::filesystem::directory_iterator(dir.path()))
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
}
