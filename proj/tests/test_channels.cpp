#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <regex>

#include "faceatlas/channels.hpp"
#include "faceatlas/svg.hpp"
#include "support.hpp"

using namespace faceatlas;

namespace {

const char* kHeader = "Code,DisplayName,Flow,ColorHint\n";

std::vector<ChannelSpec> sample_channels(const AtlasProgram& program) {
  return bind_channels(parse_channels(read_text_file(support::data_path("channels.csv"))), program);
}

const ChannelSpec& spec_for(const std::vector<ChannelSpec>& specs, const std::string& code) {
  for (const auto& s : specs) {
    if (s.code == code) return s;
  }
  throw std::runtime_error("no channel " + code);
}

/// Tag balance plus attribute quoting; enough to catch broken markup.
bool well_formed_xml(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  const std::regex open(R"(^<([A-Za-z][\w:-]*)((\s+[\w:-]+="[^"<&]*")*)\s*(/?)>$)");
  const std::regex close(R"(^</([A-Za-z][\w:-]*)\s*>$)");
  bool root_seen = false;
  while ((pos = doc.find('<', pos)) != std::string::npos) {
    const std::size_t end = doc.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = doc.substr(pos, end - pos + 1);
    pos = end + 1;
    if (tag.starts_with("<?")) continue;
    std::smatch m;
    if (std::regex_match(tag, m, close)) {
      if (stack.empty() || stack.back() != m[1]) return false;
      stack.pop_back();
    } else if (std::regex_match(tag, m, open)) {
      if (stack.empty() && root_seen) return false;
      root_seen = true;
      if (m[4] != "/") stack.push_back(m[1]);
    } else {
      return false;
    }
  }
  return root_seen && stack.empty();
}

}  // namespace

TEST_CASE("channel file parsing") {
  const auto specs = parse_channels(read_text_file(support::data_path("channels.csv")));
  REQUIRE(specs.size() == 3);
  CHECK(specs[0].code == "RHD");
  CHECK(specs[0].flow.empty());
  CHECK(specs[1].display_name == "Stomach Meridian");
  CHECK(specs[1].flow == std::vector<PointId>{{"ST", 1}, {"ST", 2}});
  CHECK(specs[1].color_hint == Rgb{0xE6, 0x7E, 0x22});
  CHECK(specs[1].color_hint.hex() == "#E67E22");

  CHECK_THROWS_AS(parse_channels("Code,Name\nST,x,,#000000\n"), BadHeader);
  CHECK_THROWS_AS(parse_channels(""), BadHeader);
  try {
    parse_channels(std::string(kHeader) + "ST,a,ST1;ST1,#000000\nst,b,,#000000\nGB,c,,red\nBL,d,,#00ff00\n");
    FAIL("expected RowError");
  } catch (const RowError& e) {
    REQUIRE(e.diagnostics().size() == 3);
    CHECK(e.diagnostics()[0].line == 2);
    CHECK(e.diagnostics()[0].message.find("repeats ST1") != std::string::npos);
    CHECK(e.diagnostics()[1].line == 3);
    CHECK(e.diagnostics()[2].line == 4);
  }
}

TEST_CASE("binding fills flows and rejects unknown points") {
  const AtlasProgram program = support::sample_program();
  const auto specs = sample_channels(program);
  CHECK(spec_for(specs, "RHD").flow == std::vector<PointId>{{"RHD", 1}, {"RHD", 2}, {"RHD", 3}});
  CHECK(spec_for(specs, "GV").flow == std::vector<PointId>{{"GV", 26}});

  // channels missing from the file get a neutral default
  const auto defaults = bind_channels({}, program);
  CHECK(defaults.size() == program.channels().size());
  CHECK(spec_for(defaults, "ST").flow == std::vector<PointId>{{"ST", 1}, {"ST", 2}});

  const auto bad = parse_channels(std::string(kHeader) + "ST,Stomach,ST1;ST9,#000000\n");
  CHECK_THROWS_AS(bind_channels(bad, program), UnknownPoint);
}

TEST_CASE("polylines") {
  const AtlasProgram program = support::sample_program();
  const auto specs = sample_channels(program);
  const EvaluatedAtlas atlas = evaluate_atlas(program, synthetic_face(), default_semantics());

  SUBCASE("bilateral channel gives one chain per side") {
    const auto lines = channel_polylines(spec_for(specs, "ST"), program, atlas);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].side == Side::Left);
    CHECK(lines[1].side == Side::Right);
    for (const auto& l : lines) {
      CHECK(l.ids == std::vector<PointId>{{"ST", 1}, {"ST", 2}});
      CHECK(l.points_px.size() == 2);
    }
    CHECK(lines[0].points_px[0].x < lines[1].points_px[0].x);
    CHECK(to_json(lines[0])["ids"] == nlohmann::json::array({"ST1", "ST2"}));
  }
  SUBCASE("a centre channel gives a single chain") {
    // RHD3 is symmetric, so a centre-only reference flow is built by hand
    ChannelSpec centre{"RHD", "Reference", {{"RHD", 1}, {"RHD", 2}}, {}};
    const auto lines = channel_polylines(centre, program, atlas);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].side == Side::Center);
    CHECK(lines[0].ids.size() == 2);
    CHECK(channel_polylines(spec_for(specs, "GV"), program, atlas).size() == 1);
  }
  SUBCASE("a missing point splits the chain") {
    const std::string text = support::sample_atlas_text() + "ST,3,Juliao,Cheek,GetX(ST2),GetY(ST2)+U,TRUE,-\n";
    const AtlasProgram p3 = compile_atlas(parse_atlas(text));
    EvaluatedAtlas a = evaluate_atlas(p3, synthetic_face(), default_semantics());
    std::erase_if(a.points, [](const EvaluatedPoint& p) { return p.id == PointId{"ST", 2}; });
    const ChannelSpec st{"ST", "Stomach", {{"ST", 1}, {"ST", 2}, {"ST", 3}}, {}};
    const auto lines = channel_polylines(st, p3, a);
    REQUIRE(lines.size() == 4);
    for (const auto& l : lines) CHECK(l.ids.size() == 1);
    CHECK(lines[0].ids[0] == PointId{"ST", 1});
    CHECK(lines[1].ids[0] == PointId{"ST", 3});
  }
  SUBCASE("degenerate atlas has no polylines") {
    EvaluatedAtlas d;
    d.degenerate = true;
    CHECK(channel_polylines(spec_for(specs, "ST"), program, d).empty());
  }
}

TEST_CASE("property: polyline order is the flow order restricted to present points") {
  const std::string text = support::sample_atlas_text() +
                           "ST,3,Juliao,Cheek,GetX(ST2),GetY(ST2)+U,TRUE,-\n"
                           "ST,4,Dicang,Mouth,GetX(ST3),GetY(ST3)+U,TRUE,-\n"
                           "ST,5,Daying,Jaw,GetX(ST4),GetY(ST4)+U,TRUE,-\n";
  const AtlasProgram program = compile_atlas(parse_atlas(text));
  const EvaluatedAtlas full = evaluate_atlas(program, synthetic_face(), default_semantics());
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    ChannelSpec spec{"ST", "Stomach", {}, {}};
    for (int i = 1; i <= 5; ++i) spec.flow.push_back({"ST", i});
    std::shuffle(spec.flow.begin(), spec.flow.end(), rng);
    EvaluatedAtlas a = full;
    std::set<PointId> removed;
    for (const auto& id : spec.flow) {
      if (support::uniform_int(rng, 0, 2) == 0) removed.insert(id);
    }
    std::erase_if(a.points, [&](const EvaluatedPoint& p) { return removed.count(p.id) > 0; });

    const auto lines = channel_polylines(spec, program, a);
    for (const Side side : {Side::Left, Side::Right}) {
      std::vector<PointId> joined;
      std::size_t chains = 0;
      for (const auto& l : lines) {
        if (l.side != side) continue;
        ++chains;
        joined.insert(joined.end(), l.ids.begin(), l.ids.end());
      }
      std::vector<PointId> expected;
      std::size_t runs = 0;
      bool in_run = false;
      for (const auto& id : spec.flow) {
        const bool present = removed.count(id) == 0;
        if (present) expected.push_back(id);
        if (present && !in_run) ++runs;
        in_run = present;
      }
      CHECK(joined == expected);
      CHECK(chains == runs);
    }
  }
}

TEST_CASE("channel selection") {
  const AtlasProgram program = support::sample_program();
  SUBCASE("{ST}") {
    const auto sel = select_channels({"ST"}, program);
    CHECK(sel.ids == std::vector<PointId>{{"ST", 1}, {"ST", 2}});
    CHECK(sel.channels == std::vector<std::string>{"ST"});
    CHECK(sel.unknown.empty());
  }
  SUBCASE("empty means all") {
    const auto sel = select_channels({}, program);
    CHECK(sel.ids.size() == program.size());
    CHECK(sel.channels == program.channels());
  }
  SUBCASE("{ZZ}") {
    const auto sel = select_channels({"ZZ"}, program);
    CHECK(sel.ids.empty());
    CHECK(sel.unknown == std::vector<std::string>{"ZZ"});
  }
}

TEST_CASE("property: selection commutes with evaluation") {
  const AtlasProgram program = compile_atlas(parse_atlas(support::full_size_atlas_text()));
  const SemanticsConfig cfg = default_semantics();
  std::mt19937_64 rng(404);
  const auto& all = program.channels();
  for (int trial = 0; trial < 60; ++trial) {
    std::set<std::string> codes;
    for (const auto& c : all) {
      if (support::uniform_int(rng, 0, 2) == 0) codes.insert(c);
    }
    if (trial % 10 == 0) codes.insert("ZZ");
    FixtureOptions opts;
    opts.roll_degrees = support::uniform(rng, -10, 10);
    const LandmarkFrame f = perturb(synthetic_face(opts), rng, 0.001);
    const ChannelSelection sel = select_channels(codes, program);
    const EvaluatedAtlas selected = evaluate_atlas(program, f, cfg, &sel.mask);
    const EvaluatedAtlas filtered = filter_atlas(evaluate_atlas(program, f, cfg), sel);
    CHECK(to_json(selected) == to_json(filtered));
  }
}

TEST_CASE("svg overlay") {
  const AtlasProgram program = support::sample_program();
  const auto specs = sample_channels(program);
  const EvaluatedAtlas atlas = evaluate_atlas(program, synthetic_face(), default_semantics());
  const std::string svg = render_svg(atlas, program, specs);
  CHECK(well_formed_xml(svg));
  CHECK_FALSE(well_formed_xml("<svg><g></svg>"));
  CHECK(svg.find("width=\"640\"") != std::string::npos);
  CHECK(svg.find("ST2.L") != std::string::npos);
  CHECK(svg.find("GV26<") != std::string::npos);
  // ST points hang off the estimated hairline, so they are drawn hollow
  std::size_t hollow = 0, circles = 0;
  for (std::size_t p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) {
    ++circles;
    if (svg.compare(svg.find("fill=", p), 11, "fill=\"none\"") == 0) ++hollow;
  }
  CHECK(circles == 9);
  CHECK(hollow == 5);  // RHD2 + ST1/ST2 on both sides
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 10);
  CHECK(svg.find("<path class=\"ST\"") != std::string::npos);

  EvaluatedAtlas degenerate;
  degenerate.width = degenerate.height = 100;
  degenerate.degenerate = true;
  degenerate.degenerate_reason = "brows <coincide> & more";
  const std::string d = render_svg(degenerate, program, specs);
  CHECK(well_formed_xml(d));
  CHECK(d.find("&lt;coincide&gt; &amp;") != std::string::npos);
  CHECK(xml_escape("a\"'") == "a&quot;&apos;");
}
