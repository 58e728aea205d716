#include "implan/interchange.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace implan {

InterchangeParseError::InterchangeParseError(int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_number(line) {}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void export_interchange(const DiscretePomdp& model, std::ostream& out) {
  out << "# POMDP interchange export\n";
  out << "discount: " << format_double(model.discount) << "\n";
  out << "values: reward\n";
  out << "states: " << model.num_states << "\n";
  out << "actions: " << model.num_actions << "\n";
  out << "observations: " << model.num_observations << "\n";
  if (!model.failure_states.empty()) {
    out << "# x-failure-states:";
    for (int s : model.failure_states) {
      out << ' ' << s;
    }
    out << "\n";
  }
  if (!model.terminal_states.empty()) {
    out << "# x-terminal-states:";
    for (int s : model.terminal_states) {
      out << ' ' << s;
    }
    out << "\n";
  }
  out << "start:";
  for (double p : model.initial_belief.probs) {
    out << ' ' << format_double(p);
  }
  out << "\n\n";
  for (int a = 0; a < model.num_actions; ++a) {
    const SparseMatrix& t = model.transition[static_cast<std::size_t>(a)];
    for (int s = 0; s < model.num_states; ++s) {
      for (const SparseMatrix::Entry& e : t.row(s)) {
        out << "T: " << a << " : " << s << " : " << e.col << " "
            << format_double(e.value) << "\n";
      }
    }
  }
  for (int a = 0; a < model.num_actions; ++a) {
    const SparseMatrix& z = model.observation[static_cast<std::size_t>(a)];
    for (int s = 0; s < model.num_states; ++s) {
      for (const SparseMatrix::Entry& e : z.row(s)) {
        out << "O: " << a << " : " << s << " : " << e.col << " "
            << format_double(e.value) << "\n";
      }
    }
  }
  for (int a = 0; a < model.num_actions; ++a) {
    const std::vector<double>& r = model.reward[static_cast<std::size_t>(a)];
    for (int s = 0; s < model.num_states; ++s) {
      if (r[static_cast<std::size_t>(s)] != 0.0) {
        out << "R: " << a << " : " << s << " : * : * "
            << format_double(r[static_cast<std::size_t>(s)]) << "\n";
      }
    }
  }
}

std::string export_interchange(const DiscretePomdp& model) {
  std::ostringstream out;
  export_interchange(model, out);
  return out.str();
}

namespace {

struct Parser {
  int line_number = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw InterchangeParseError(line_number, what);
  }

  int parse_index(const std::string& token, int limit, const char* kind) const {
    char* end = nullptr;
    const long v = std::strtol(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0' || v < 0 || v >= limit) {
      fail(std::string(kind) + " index out of range: " + token);
    }
    return static_cast<int>(v);
  }

  double parse_value(const std::string& token) const {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
      fail("malformed number: " + token);
    }
    return v;
  }
};

// "T: a : s : s' p" -> tokens {a, s, s', p}
std::vector<std::string> split_entry(const std::string& body) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : body) {
    if (c == ':' || c == ' ' || c == '\t') {
      if (!current.empty()) {
        tokens.push_back(current);
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) {
    tokens.push_back(current);
  }
  return tokens;
}

std::vector<int> parse_state_list(const std::string& body) {
  std::istringstream in(body);
  std::vector<int> states;
  int s;
  while (in >> s) {
    states.push_back(s);
  }
  return states;
}

}  // namespace

DiscretePomdp import_interchange(std::istream& in) {
  Parser parser;
  DiscretePomdp model;
  bool have_counts = false;
  std::vector<std::vector<SparseMatrix::Triplet>> t_triplets;
  std::vector<std::vector<SparseMatrix::Triplet>> z_triplets;
  std::string line;
  while (std::getline(in, line)) {
    ++parser.line_number;
    if (line.rfind("# x-failure-states:", 0) == 0) {
      model.failure_states = parse_state_list(line.substr(19));
      continue;
    }
    if (line.rfind("# x-terminal-states:", 0) == 0) {
      model.terminal_states = parse_state_list(line.substr(20));
      continue;
    }
    if (line.empty() || line[0] == '#') {
      continue;
    }
    if (line.rfind("discount:", 0) == 0) {
      model.discount = parser.parse_value(split_entry(line.substr(9)).at(0));
      continue;
    }
    if (line.rfind("values:", 0) == 0) {
      continue;  // always reward-valued
    }
    if (line.rfind("states:", 0) == 0) {
      model.num_states = static_cast<int>(parser.parse_value(
          split_entry(line.substr(7)).at(0)));
      continue;
    }
    if (line.rfind("actions:", 0) == 0) {
      model.num_actions = static_cast<int>(parser.parse_value(
          split_entry(line.substr(8)).at(0)));
      continue;
    }
    if (line.rfind("observations:", 0) == 0) {
      model.num_observations = static_cast<int>(parser.parse_value(
          split_entry(line.substr(13)).at(0)));
      continue;
    }
    if (line.rfind("start:", 0) == 0) {
      const std::vector<std::string> tokens = split_entry(line.substr(6));
      model.initial_belief.probs.clear();
      for (const std::string& token : tokens) {
        model.initial_belief.probs.push_back(parser.parse_value(token));
      }
      continue;
    }
    if (line.rfind("T:", 0) == 0 || line.rfind("O:", 0) == 0 ||
        line.rfind("R:", 0) == 0) {
      if (!have_counts) {
        if (model.num_states <= 0 || model.num_actions <= 0 ||
            model.num_observations <= 0) {
          parser.fail("matrix entry before states/actions/observations header");
        }
        t_triplets.resize(static_cast<std::size_t>(model.num_actions));
        z_triplets.resize(static_cast<std::size_t>(model.num_actions));
        model.reward.assign(
            static_cast<std::size_t>(model.num_actions),
            std::vector<double>(static_cast<std::size_t>(model.num_states), 0.0));
        have_counts = true;
      }
      const char kind = line[0];
      const std::vector<std::string> tokens = split_entry(line.substr(2));
      if (kind == 'T') {
        if (tokens.size() != 4) {
          parser.fail("expected 'T: a : s : s-next p'");
        }
        const int a = parser.parse_index(tokens[0], model.num_actions, "action");
        const int s = parser.parse_index(tokens[1], model.num_states, "state");
        const int s2 = parser.parse_index(tokens[2], model.num_states, "state");
        t_triplets[static_cast<std::size_t>(a)].push_back(
            {s, s2, parser.parse_value(tokens[3])});
      } else if (kind == 'O') {
        if (tokens.size() != 4) {
          parser.fail("expected 'O: a : s-next : o p'");
        }
        const int a = parser.parse_index(tokens[0], model.num_actions, "action");
        const int s = parser.parse_index(tokens[1], model.num_states, "state");
        const int o =
            parser.parse_index(tokens[2], model.num_observations, "observation");
        z_triplets[static_cast<std::size_t>(a)].push_back(
            {s, o, parser.parse_value(tokens[3])});
      } else {
        if (tokens.size() != 5 || tokens[2] != "*" || tokens[3] != "*") {
          parser.fail("expected 'R: a : s : * : * value'");
        }
        const int a = parser.parse_index(tokens[0], model.num_actions, "action");
        const int s = parser.parse_index(tokens[1], model.num_states, "state");
        model.reward[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)] =
            parser.parse_value(tokens[4]);
      }
      continue;
    }
    parser.fail("unrecognized directive: " + line);
  }
  if (!have_counts) {
    parser.fail("no matrix entries found");
  }
  if (static_cast<int>(model.initial_belief.probs.size()) != model.num_states) {
    parser.fail("start distribution length does not match states");
  }
  for (int a = 0; a < model.num_actions; ++a) {
    model.transition.push_back(SparseMatrix::from_triplets(
        model.num_states, model.num_states,
        std::move(t_triplets[static_cast<std::size_t>(a)])));
    model.observation.push_back(SparseMatrix::from_triplets(
        model.num_states, model.num_observations,
        std::move(z_triplets[static_cast<std::size_t>(a)])));
  }
  return model;
}

DiscretePomdp import_interchange(const std::string& text) {
  std::istringstream in(text);
  return import_interchange(in);
}

}  // namespace implan
