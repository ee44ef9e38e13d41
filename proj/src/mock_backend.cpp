#include "visa/mock_backend.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <random>
#include <set>
#include <utility>

namespace visa {

namespace {

constexpr std::string_view kFacts = "FACTS:[";
constexpr std::string_view kValues = "VALUES:[";
constexpr std::string_view kText = "TEXT:";

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void skip_spaces(std::string_view& s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
}

double parse_real(std::string_view s) {
  double x = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) throw ValidationError("mock text: bad number '" + std::string(s) + "'");
  return x;
}

}  // namespace

std::string format_real(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string render_mock_text(const MockText& m) {
  std::set<std::string_view> seen;
  std::string out(kFacts);
  for (std::size_t i = 0; i < m.facts.size(); ++i) {
    const std::string& f = m.facts[i];
    if (f.empty() || f.find_first_of(";]") != std::string::npos)
      throw ValidationError("mock fact must be non-empty and free of ';' and ']': '" + f + "'");
    if (!seen.insert(f).second) throw ValidationError("duplicate mock fact '" + f + "'");
    if (i) out += ';';
    out += f;
  }
  out += "] ";
  out += kValues;
  for (int i = 0; i < kNumDimensions; ++i) {
    if (i) out += ',';
    out += dimension_name(kAllDimensions[static_cast<std::size_t>(i)]);
    out += '=';
    out += format_real(m.values(i));
  }
  out += ']';
  if (m.free_text) {
    out += ' ';
    out += kText;
    out += *m.free_text;
  }
  return out;
}

MockText parse_mock_text(std::string_view text) {
  MockText m;
  std::string_view rest = text;
  skip_spaces(rest);

  if (rest.starts_with(kFacts)) {
    rest.remove_prefix(kFacts.size());
    const std::size_t close = rest.find(']');
    if (close == std::string_view::npos) throw ValidationError("mock text: unterminated FACTS block");
    const std::string_view body = rest.substr(0, close);
    rest.remove_prefix(close + 1);
    if (!body.empty()) {
      for (std::string_view f : split(body, ';')) {
        if (f.empty()) continue;
        std::string fact(f);
        if (std::find(m.facts.begin(), m.facts.end(), fact) == m.facts.end()) m.facts.push_back(std::move(fact));
      }
    }
    skip_spaces(rest);
  }

  if (rest.starts_with(kValues)) {
    rest.remove_prefix(kValues.size());
    const std::size_t close = rest.find(']');
    if (close == std::string_view::npos) throw ValidationError("mock text: unterminated VALUES block");
    const std::string_view body = rest.substr(0, close);
    rest.remove_prefix(close + 1);
    ValueCoeffs<double> c = ValueCoeffs<double>::Zero();
    if (!body.empty()) {
      for (std::string_view item : split(body, ',')) {
        const std::size_t eq = item.find('=');
        if (eq == std::string_view::npos) throw ValidationError("mock text: bad VALUES entry '" + std::string(item) + "'");
        auto d = parse_dimension(item.substr(0, eq));
        if (!d) throw ValidationError("mock text: unknown dimension '" + std::string(item.substr(0, eq)) + "'");
        c(index_of(*d)) = parse_real(item.substr(eq + 1));
      }
    }
    m.values = ValueVector::clamped(c);
  }

  if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.starts_with(kText)) {
    rest.remove_prefix(kText.size());
    m.free_text = std::string(rest);
  } else if (!rest.empty()) {
    m.free_text = std::string(rest);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Keyword table. An intensifier applies to every dimension keyword after it
// until the next intensifier; keywords with no intensifier before them count
// as "more".

namespace {

struct KeywordRule {
  std::string_view stem;
  std::vector<ValueDimension> dims;
};

const std::vector<KeywordRule>& keyword_rules() {
  using D = ValueDimension;
  static const std::vector<KeywordRule> rules = {
      {"self-direct", {D::SelfDirection}},
      {"selfdirect", {D::SelfDirection}},
      {"independen", {D::SelfDirection}},
      {"autonom", {D::SelfDirection}},
      {"creativ", {D::SelfDirection}},
      {"stimulat", {D::Stimulation}},
      {"adventur", {D::Stimulation}},
      {"excit", {D::Stimulation}},
      {"hedonis", {D::Hedonism}},
      {"pleasur", {D::Hedonism}},
      {"enjoy", {D::Hedonism}},
      {"achiev", {D::Achievement}},
      {"ambitio", {D::Achievement}},
      {"success", {D::Achievement}},
      {"power", {D::Power}},
      {"authorit", {D::Power}},
      {"dominan", {D::Power}},
      {"secur", {D::Security}},
      {"safe", {D::Security}},
      {"conformi", {D::Conformity}},
      {"obedien", {D::Conformity}},
      {"tradition", {D::Tradition}},
      {"benevol", {D::Benevolence}},
      {"caring", {D::Benevolence}},
      {"kind", {D::Benevolence}},
      {"universal", {D::Universalism}},
      {"toleran", {D::Universalism}},
      {"conservat", {D::Tradition, D::Conformity, D::Security}},
      {"open", {D::SelfDirection, D::Stimulation}},
  };
  return rules;
}

std::vector<std::string> tokenize_lower(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || ch == '-') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_strengthener(const std::string& w) { return w == "much" || w == "far" || w == "significantly" || w == "a-lot"; }

}  // namespace

ValueDelta mock_translate(std::string_view instruction) {
  const auto words = tokenize_lower(instruction);
  ValueCoeffs<double> shift = ValueCoeffs<double>::Zero();
  double intensity = 0.5;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string& w = words[i];
    const bool strong = i > 0 && is_strengthener(words[i - 1]);
    if (w == "more") {
      intensity = strong ? 1.0 : 0.5;
      continue;
    }
    if (w == "less") {
      intensity = strong ? -1.0 : -0.5;
      continue;
    }
    for (const auto& rule : keyword_rules()) {
      if (w.starts_with(rule.stem)) {
        for (ValueDimension d : rule.dims) shift(index_of(d)) += intensity;
        break;
      }
    }
  }
  return ValueDelta::clamped(shift);
}

double mock_axis_score(const ValueVector& v, EvalDimension d) {
  using D = ValueDimension;
  switch (d) {
    case EvalDimension::TraditionalVsSecular:
      return v[D::SelfDirection] + v[D::Universalism] - v[D::Tradition] - v[D::Conformity];
    case EvalDimension::SurvivalVsSelfExpression:
      return v[D::Universalism] + v[D::SelfDirection] + v[D::Stimulation] - v[D::Security] - v[D::Power];
    case EvalDimension::IndividualismVsCollectivism:
      return v[D::SelfDirection] + v[D::Achievement] + v[D::Hedonism] + v[D::Power] - v[D::Benevolence] -
             v[D::Conformity] - v[D::Tradition];
    case EvalDimension::GenderRoles:
      return v[D::Universalism] + v[D::SelfDirection] - v[D::Tradition];
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

ValueVector MockBackend::detect(std::string_view /*prompt*/, std::string_view response) {
  return parse_mock_text(response).values;
}

ValueDelta MockBackend::translate(std::string_view, std::string_view, std::string_view instruction) {
  return mock_translate(instruction);
}

std::vector<std::string> MockBackend::rewrite(std::string_view /*prompt*/, std::string_view original,
                                              const ValueVector& v_target, int n, double noise, std::uint64_t seed) {
  if (n < 1) throw ValidationError("rewrite needs n >= 1");
  if (!(noise >= 0.0)) throw ValidationError("rewrite noise must be >= 0");
  const MockText source = parse_mock_text(original);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    MockText m;
    m.facts = source.facts;
    m.free_text = source.free_text;
    if (noise == 0.0) {
      m.values = v_target;
    } else {
      ValueCoeffs<double> c = v_target.coeffs();
      for (int i = 0; i < kNumDimensions; ++i) c(i) += noise * gauss(rng);
      m.values = ValueVector::clamped(c);
    }
    out.push_back(render_mock_text(m));
  }
  return out;
}

std::vector<std::string> MockBackend::generate(std::string_view /*question*/, int n, double /*temperature*/,
                                               std::uint64_t seed) {
  if (n < 1) throw ValidationError("generate needs n >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::string> out;
  for (int j = 0; j < n; ++j) {
    ValueCoeffs<double> c = cfg_.profile.coeffs();
    if (cfg_.generation_noise > 0.0)
      for (int i = 0; i < kNumDimensions; ++i) c(i) += cfg_.generation_noise * gauss(rng);
    MockText m;
    m.values = ValueVector::clamped(c);
    m.free_text = "sample " + std::to_string(j);
    out.push_back(render_mock_text(m));
  }
  return out;
}

FactScore MockBackend::fact_score(std::string_view original, std::string_view candidate) {
  const auto fo = parse_mock_text(original).facts;
  const auto fc = parse_mock_text(candidate).facts;
  const std::set<std::string> so(fo.begin(), fo.end());
  std::size_t common = 0;
  for (const auto& f : fc) common += so.count(f);
  const double forward = fc.empty() ? 1.0 : static_cast<double>(common) / static_cast<double>(fc.size());
  const double backward = fo.empty() ? 1.0 : static_cast<double>(common) / static_cast<double>(fo.size());
  return FactScore::from_directions(forward, backward);
}

std::string MockBackend::judge_reply(std::string_view response_1, std::string_view response_2, EvalDimension d) {
  const double s1 = mock_axis_score(parse_mock_text(response_1).values, d);
  const double s2 = mock_axis_score(parse_mock_text(response_2).values, d);
  return "Axis " + std::string(eval_dimension_name(d)) + ": response 1 scores " + format_real(s1) +
         ", response 2 scores " + format_real(s2) + ". " + (s1 > s2 ? "1" : "2");
}

Verdict MockBackend::judge_pair(std::string_view, std::string_view response_1, std::string_view response_2,
                                EvalDimension dimension) {
  const std::string reply = judge_reply(response_1, response_2, dimension);
  auto v = parse_judge_reply(reply);
  if (!v) throw JudgmentError("mock judge produced an unparseable reply", reply);
  return *v;
}

Verdict ScriptedJudge::judge_pair(std::string_view, std::string_view, std::string_view, EvalDimension) {
  if (replies_.empty()) throw JudgmentError("scripted judge has no replies");
  const std::string& reply = replies_[next_.fetch_add(1) % replies_.size()];
  auto v = parse_judge_reply(reply);
  if (!v) throw JudgmentError("judge reply does not end in 1 or 2", reply);
  return *v;
}

}  // namespace visa
