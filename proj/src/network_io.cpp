#include "prk/network_io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <sstream>

namespace prk {

namespace {

void check_predicates(const KnowledgeBase& kb) {
  auto check = [&](const RuleTemplate& t, const PredicateCall& c) {
    auto it = kb.predicates.find(c.name);
    if (it == kb.predicates.end()) {
      throw NetworkError(NetworkError::Kind::UndeclaredPredicate,
                         "rule " + t.name + " calls undeclared predicate " + c.name);
    }
    if (it->second != static_cast<int>(c.args.size())) {
      throw NetworkError(NetworkError::Kind::UndeclaredPredicate,
                         "rule " + t.name + " calls " + c.name + " with " + std::to_string(c.args.size()) +
                             " arguments, declared arity " + std::to_string(it->second));
    }
  };
  for (const RuleTemplate& t : kb.templates) {
    for (const Premise& p : t.premises) {
      if (p.kind == PremiseKind::Call) check(t, p.call);
    }
    for (const PredicateCall& c : t.context) check(t, c);
  }
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::vector<std::string> words(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

[[noreturn]] void format_error(const std::string& m) { throw NetworkError(NetworkError::Kind::Format, "malformed network: " + m); }

std::uint32_t to_u32(const std::string& s) {
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) format_error("expected an integer, got '" + s + "'");
  return v;
}

double to_double(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) format_error("expected a number, got '" + s + "'");
  return v;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

CompiledNetwork compile(const KnowledgeBase& kb) {
  check_predicates(kb);
  CompiledNetwork net{kb, build_graph(kb), sha256_hex(print_kb(kb))};
  check_graph(net.graph);
  return net;
}

std::string emit_network(const RuleGraph& g, const KnowledgeBase& kb) {
  check_predicates(kb);
  std::string kb_text = print_kb(kb);
  std::ostringstream os;
  os << "RKN1\n";
  os << "version " << kNetworkVersion << "\n";
  os << "kb-hash " << sha256_hex(kb_text) << "\n";
  os << "nodes " << g.nodes.size() << "\n";
  os << "arcs " << g.arcs.size() << "\n";
  for (const std::string& t : kb.object_types) os << "type " << t << "\n";
  for (const auto& [name, arity] : kb.predicates) os << "predicate " << name << " " << arity << "\n";
  for (std::uint32_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    if (n.kind == GraphNodeKind::Wff) {
      os << "node " << i << " or " << n.key << " " << (n.input ? "input" : "derived") << " aggregate "
         << to_string(kb.aggregation_for(n.key.substr(0, n.key.rfind('/')))) << "\n";
      continue;
    }
    const RuleTemplate& t = *kb.find_template(n.key);
    os << "node " << i << " and " << n.key << " class " << format_class_path(t.rule_class) << " tnorm "
       << to_string(t.family) << " s " << format_number(t.sufficiency) << " n " << format_number(t.necessity)
       << " vars " << t.vars.size();
    for (const TemplateVar& v : t.vars) os << " " << v.name << ":" << v.type;
    os << " context " << t.context.size();
    for (const PredicateCall& c : t.context) os << " " << c.name;
    os << "\n";
  }
  for (const GraphArc& a : g.arcs) {
    os << "arc " << a.from << " " << a.to << " " << to_string(a.kind);
    if (a.kind == ArcKind::Nm) os << " alpha " << format_number(a.alpha);
    os << "\n";
  }
  os << "topo";
  for (std::uint32_t n : g.topo_order) os << " " << n;
  os << "\n";
  for (const auto& l : g.nm_loops) {
    os << "loop";
    for (std::uint32_t n : l) os << " " << n;
    os << "\n";
  }
  auto kb_lines = split_lines(kb_text);
  os << "kb " << kb_lines.size() << "\n";
  for (const std::string& l : kb_lines) os << "| " << l << "\n";
  std::string body = os.str();
  return body + "checksum " + sha256_hex(body) + "\n";
}

CompiledNetwork load_network(std::string_view bytes) {
  if (bytes.substr(0, 3) != "RKN" || bytes.size() < 5 || bytes[4] != '\n') {
    throw NetworkError(NetworkError::Kind::Format, "not a compiled network (bad magic)");
  }
  if (bytes[3] != '0' + kNetworkVersion) {
    throw NetworkError(NetworkError::Kind::Version,
                       "unsupported network version " + std::string(1, bytes[3]) + " (expected " +
                           std::to_string(kNetworkVersion) + ")");
  }
  auto lines = split_lines(bytes);
  if (lines.size() < 2) throw NetworkError(NetworkError::Kind::Checksum, "checksum missing (file truncated?)");
  auto version = words(lines[1]);
  if (version.size() != 2 || version[0] != "version") format_error("missing version line");
  if (version[1] != std::to_string(kNetworkVersion)) {
    throw NetworkError(NetworkError::Kind::Version, "unsupported network version " + version[1]);
  }

  std::size_t trailer = bytes.rfind("checksum ");
  bool at_line_start = trailer != std::string_view::npos && (trailer == 0 || bytes[trailer - 1] == '\n');
  if (!at_line_start || bytes.back() != '\n') {
    throw NetworkError(NetworkError::Kind::Checksum, "checksum missing (file truncated?)");
  }
  std::string expected(bytes.substr(trailer + 9, bytes.size() - trailer - 10));
  if (sha256_hex(bytes.substr(0, trailer)) != expected) {
    throw NetworkError(NetworkError::Kind::Checksum, "checksum mismatch");
  }

  std::size_t node_count = 0, arc_count = 0;
  std::string hash;
  RuleGraph g;
  std::string kb_text;
  std::size_t i = 2;
  for (; i < lines.size(); ++i) {
    auto w = words(lines[i]);
    if (w.empty()) continue;
    const std::string& head = w[0];
    if (head == "kb-hash" && w.size() == 2) {
      hash = w[1];
    } else if (head == "nodes" && w.size() == 2) {
      node_count = to_u32(w[1]);
    } else if (head == "arcs" && w.size() == 2) {
      arc_count = to_u32(w[1]);
    } else if (head == "type" || head == "predicate") {
      // The embedded KB carries these; the lines are for readers of the file.
    } else if (head == "node" && w.size() >= 4) {
      if (to_u32(w[1]) != g.nodes.size()) format_error("node ids out of order");
      if (w[2] == "or") {
        if (w.size() < 5) format_error("short node line");
        g.nodes.push_back({GraphNodeKind::Wff, w[3], w[4] == "input"});
      } else if (w[2] == "and") {
        g.nodes.push_back({GraphNodeKind::Rule, w[3], false});
      } else {
        format_error("unknown node kind " + w[2]);
      }
    } else if (head == "arc" && w.size() >= 4) {
      auto k = parse_arc_kind(w[3]);
      if (!k) format_error("unknown arc kind " + w[3]);
      GraphArc a{to_u32(w[1]), to_u32(w[2]), *k, 0.0};
      if (*k == ArcKind::Nm) {
        if (w.size() != 6 || w[4] != "alpha") format_error("nm arc without alpha");
        a.alpha = to_double(w[5]);
      }
      g.arcs.push_back(a);
    } else if (head == "topo") {
      for (std::size_t j = 1; j < w.size(); ++j) g.topo_order.push_back(to_u32(w[j]));
    } else if (head == "loop") {
      std::vector<std::uint32_t> l;
      for (std::size_t j = 1; j < w.size(); ++j) l.push_back(to_u32(w[j]));
      g.nm_loops.push_back(std::move(l));
    } else if (head == "kb" && w.size() == 2) {
      std::size_t n = to_u32(w[1]);
      if (i + n >= lines.size()) format_error("embedded KB is truncated");
      for (std::size_t j = 1; j <= n; ++j) {
        const std::string& l = lines[i + j];
        if (l.rfind("| ", 0) == 0) {
          kb_text += l.substr(2);
        } else if (l == "|") {
        } else {
          format_error("bad embedded KB line");
        }
        kb_text += '\n';
      }
      i += n;
    } else if (head == "checksum") {
      break;
    } else {
      format_error("unexpected line '" + lines[i] + "'");
    }
  }

  if (g.nodes.size() != node_count || g.arcs.size() != arc_count) {
    throw NetworkError(NetworkError::Kind::Invariant, "node/arc counts do not match the header");
  }
  CompiledNetwork net;
  try {
    net.kb = parse_kb(kb_text);
  } catch (const ParseError& e) {
    throw NetworkError(NetworkError::Kind::Format, std::string("embedded KB: ") + e.what());
  }
  net.kb_hash = sha256_hex(print_kb(net.kb));
  if (net.kb_hash != hash) throw NetworkError(NetworkError::Kind::Invariant, "KB hash does not match the embedded KB");
  try {
    check_graph(g);
  } catch (const std::runtime_error& e) {
    throw NetworkError(NetworkError::Kind::Invariant, e.what());
  }
  RuleGraph rebuilt = build_graph(net.kb);
  if (!(rebuilt == g)) throw NetworkError(NetworkError::Kind::Invariant, "graph does not match the embedded KB");
  net.graph = std::move(g);
  return net;
}

}  // namespace prk
