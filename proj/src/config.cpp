#include "perpetuity/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "perpetuity/errors.hpp"

namespace perpetuity {

namespace {

struct Value {
  std::variant<double, bool, std::string, std::map<std::string, Value>> v;
  bool is_number() const { return std::holds_alternative<double>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_table() const { return std::holds_alternative<std::map<std::string, Value>>(v); }
};

class Parser {
 public:
  explicit Parser(std::string text) : text_(std::move(text)) {}

  std::map<std::string, Value> parse() {
    std::map<std::string, Value> out;
    for (;;) {
      skip_space_and_comments();
      if (at_end()) break;
      std::string key = parse_key();
      skip_inline_space();
      expect('=');
      skip_inline_space();
      Value value = parse_value();
      if (out.count(key)) fail("duplicate key '" + key + "'");
      out.emplace(std::move(key), std::move(value));
      skip_inline_space();
      if (!at_end() && text_[pos_] == '#') skip_comment();
      if (!at_end() && text_[pos_] != '\n') fail("trailing characters after value");
    }
    return out;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }

  void advance() {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }

  void skip_comment() {
    while (!at_end() && text_[pos_] != '\n') advance();
  }

  void skip_inline_space() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t')) advance();
  }

  void skip_space_and_comments() {
    while (!at_end()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        advance();
      } else if (text_[pos_] == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    if (at_end() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  std::string parse_key() {
    std::size_t start = pos_;
    while (!at_end() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      advance();
    }
    if (pos_ == start) fail("expected a key");
    return text_.substr(start, pos_ - start);
  }

  Value parse_value() {
    if (at_end()) fail("expected a value");
    const char c = peek();
    if (c == '{') return parse_table();
    if (c == '"') return Value{parse_string()};
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::string word = parse_key();
      if (word == "true") return Value{true};
      if (word == "false") return Value{false};
      fail("unquoted value '" + word + "'");
    }
    return Value{parse_number()};
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (!at_end() && text_[pos_] != '"') {
      if (text_[pos_] == '\n') fail("unterminated string");
      out.push_back(text_[pos_]);
      advance();
    }
    expect('"');
    return out;
  }

  double parse_number() {
    std::size_t start = pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                         text_[pos_] == '+' || text_[pos_] == '-' || text_[pos_] == '.' ||
                         text_[pos_] == 'e' || text_[pos_] == 'E' || text_[pos_] == '_')) {
      advance();
    }
    std::string token = text_.substr(start, pos_ - start);
    std::erase(token, '_');
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return v;
    } catch (const std::exception&) {
      fail("bad number '" + token + "'");
    }
  }

  Value parse_table() {
    expect('{');
    std::map<std::string, Value> table;
    skip_inline_space();
    if (!at_end() && peek() == '}') {
      advance();
      return Value{std::move(table)};
    }
    for (;;) {
      skip_inline_space();
      std::string key = parse_key();
      skip_inline_space();
      expect('=');
      skip_inline_space();
      Value value = parse_value();
      table.emplace(std::move(key), std::move(value));
      skip_inline_space();
      if (at_end()) fail("unterminated inline table");
      if (peek() == ',') {
        advance();
        continue;
      }
      expect('}');
      return Value{std::move(table)};
    }
  }

  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

double want_number(const Value& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("key '" + key + "' must be a number");
  return std::get<double>(v.v);
}

std::size_t want_count(const Value& v, const std::string& key) {
  const double d = want_number(v, key);
  if (!(d >= 0.0) || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
    throw ConfigError("key '" + key + "' must be a nonnegative integer");
  }
  return static_cast<std::size_t>(d);
}

std::string want_string(const Value& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("key '" + key + "' must be a string");
  return std::get<std::string>(v.v);
}

bool want_bool(const Value& v, const std::string& key) {
  if (!v.is_bool()) throw ConfigError("key '" + key + "' must be true or false");
  return std::get<bool>(v.v);
}

double table_number(const std::map<std::string, Value>& t, const std::string& key) {
  const auto it = t.find(key);
  if (it == t.end()) throw ConfigError("family table is missing key '" + key + "'");
  return want_number(it->second, key);
}

RhoFamily family_from_table(const std::map<std::string, Value>& t) {
  const auto kind_it = t.find("kind");
  if (kind_it == t.end()) throw ConfigError("family table needs a 'kind'");
  const std::string kind = want_string(kind_it->second, "kind");
  try {
    if (kind == "two_point") {
      return RhoFamily::two_point(table_number(t, "a"), table_number(t, "b"),
                                  table_number(t, "p"));
    }
    if (kind == "log_normal") {
      return RhoFamily::log_normal(table_number(t, "m"), table_number(t, "sigma"));
    }
    if (kind == "beta_ratio") {
      return RhoFamily::beta_ratio(table_number(t, "alpha"), table_number(t, "beta"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad family parameters: ") + e.what());
  }
  throw ConfigError("unknown family kind '" + kind + "'");
}

BFamily bfamily_from_table(const std::map<std::string, Value>& t) {
  const auto kind_it = t.find("kind");
  if (kind_it == t.end()) throw ConfigError("bfamily table needs a 'kind'");
  const std::string kind = want_string(kind_it->second, "kind");
  try {
    if (kind == "constant") {
      const auto it = t.find("value");
      return BFamily::constant(it == t.end() ? 1.0 : want_number(it->second, "value"));
    }
    if (kind == "exponential") return BFamily::exponential(table_number(t, "rate"));
    if (kind == "uniform") {
      return BFamily::uniform(table_number(t, "lo"), table_number(t, "hi"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad bfamily parameters: ") + e.what());
  }
  throw ConfigError("unknown bfamily kind '" + kind + "'");
}

}  // namespace

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto entries = Parser(buf.str()).parse();

  for (const auto& [key, value] : entries) {
    if (key == "family") {
      if (!value.is_table()) throw ConfigError("'family' must be an inline table");
      config.family = family_from_table(std::get<std::map<std::string, Value>>(value.v));
    } else if (key == "bfamily") {
      if (!value.is_table()) throw ConfigError("'bfamily' must be an inline table");
      config.bfamily = bfamily_from_table(std::get<std::map<std::string, Value>>(value.v));
    } else if (key == "kappa") {
      config.kappa_override = want_number(value, key);
    } else if (key == "n") {
      config.n = want_count(value, key);
    } else if (key == "n_excursions") {
      config.n_excursions = want_count(value, key);
    } else if (key == "n_tail") {
      config.n_tail = want_count(value, key);
    } else if (key == "A") {
      config.A = want_number(value, key);
    } else if (key == "eps_bias") {
      config.eps_bias = want_number(value, key);
    } else if (key == "eps_cert") {
      config.eps_cert = want_number(value, key);
    } else if (key == "rel_tol") {
      config.rel_tol = want_number(value, key);
    } else if (key == "ci_level") {
      config.ci_level = want_number(value, key);
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(want_count(value, key));
    } else if (key == "workers") {
      config.workers = static_cast<int>(want_count(value, key));
    } else if (key == "out") {
      config.out_dir = want_string(value, key);
    } else if (key == "t_min") {
      config.t_min = want_number(value, key);
    } else if (key == "t_max") {
      config.t_max = want_number(value, key);
    } else if (key == "t_points") {
      config.t_points = want_count(value, key);
    } else if (key == "lambda_min") {
      config.lambda_min = want_number(value, key);
    } else if (key == "lambda_max") {
      config.lambda_max = want_number(value, key);
    } else if (key == "lambda_points") {
      config.lambda_points = want_count(value, key);
    } else if (key == "h_coeff") {
      config.h_coeff = want_number(value, key);
    } else if (key == "force_lattice") {
      config.force_lattice = want_bool(value, key);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
}

void apply_env_overrides(RunConfig& config) {
  if (const char* seed = std::getenv("PERPETUITY_SEED")) {
    try {
      config.seed = std::stoull(seed);
    } catch (const std::exception&) {
      throw ConfigError("PERPETUITY_SEED is not an integer");
    }
  }
}

void validate(const RunConfig& config) {
  if (!config.family) throw ConfigError("no family specified");
  if (config.n < 1) throw ConfigError("n must be >= 1");
  if (!(config.A > 0.0)) throw ConfigError("A must be positive");
  const auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (!in_unit(config.eps_bias)) throw ConfigError("eps_bias must lie in (0,1)");
  if (!in_unit(config.eps_cert)) throw ConfigError("eps_cert must lie in (0,1)");
  if (!in_unit(config.rel_tol)) throw ConfigError("rel_tol must lie in (0,1)");
  if (!in_unit(config.ci_level)) throw ConfigError("ci_level must lie in (0,1)");
  if (config.workers < 1) throw ConfigError("workers must be >= 1");
  if (config.t_points < 2) throw ConfigError("t_points must be >= 2");
  if (config.t_min && config.t_max && !(*config.t_min < *config.t_max)) {
    throw ConfigError("t_min must be below t_max");
  }
  if (config.lambda_points < 1) throw ConfigError("lambda_points must be >= 1");
  if (!in_unit(config.lambda_min) || !in_unit(config.lambda_max) ||
      !(config.lambda_min <= config.lambda_max)) {
    throw ConfigError("lambda grid must satisfy 0 < lambda_min <= lambda_max < 1");
  }
  if (!(config.h_coeff > 0.0 && config.h_coeff < 1.0)) {
    throw ConfigError("h_coeff must lie in (0,1) so that lambda e^{h} -> 0");
  }
}

RhoFamily make_family(const std::string& kind, double a, double b, double p, double m,
                      double sigma, double alpha, double beta) {
  try {
    if (kind == "two_point") return RhoFamily::two_point(a, b, p);
    if (kind == "log_normal") return RhoFamily::log_normal(m, sigma);
    if (kind == "beta_ratio") return RhoFamily::beta_ratio(alpha, beta);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad family parameters: ") + e.what());
  }
  throw ConfigError("unknown family kind '" + kind + "'");
}

BFamily make_bfamily(const std::string& kind, double value, double rate, double lo, double hi) {
  try {
    if (kind == "constant") return BFamily::constant(value);
    if (kind == "exponential") return BFamily::exponential(rate);
    if (kind == "uniform") return BFamily::uniform(lo, hi);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad bfamily parameters: ") + e.what());
  }
  throw ConfigError("unknown bfamily kind '" + kind + "'");
}

}  // namespace perpetuity
