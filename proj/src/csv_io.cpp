#include "netspill/csv_io.hpp"

#include "netspill/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace netspill {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"' && trim(field).empty()) {
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      out.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else if (!(was_quoted && (ch == ' ' || ch == '\t' || ch == '\r'))) {
      field += ch;
    }
  }
  if (quoted) throw InputError(where + ": unterminated quoted field");
  out.push_back(was_quoted ? field : trim(field));
  return out;
}

std::string cell_where(const CsvTable& t, std::size_t row, const std::string& column) {
  return t.source + " line " + std::to_string(t.line_numbers[row]) + ", column " + column;
}

int parse_binary(const CsvTable& t, std::size_t row, int col) {
  const std::string& v = t.rows[row][static_cast<std::size_t>(col)];
  if (v == "0") return 0;
  if (v == "1") return 1;
  throw InputError(cell_where(t, row, t.header[static_cast<std::size_t>(col)]) + ": expected 0 or 1, got '" + v + "'");
}

double parse_double(const CsvTable& t, std::size_t row, int col) {
  const std::string& v = t.rows[row][static_cast<std::size_t>(col)];
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
    throw InputError(cell_where(t, row, t.header[static_cast<std::size_t>(col)]) + ": expected a finite number, got '" +
                     v + "'");
  }
  return x;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return static_cast<int>(k);
  }
  return -1;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + " line " + std::to_string(line_no);
    auto fields = split_line(line, where);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw InputError(where + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw InputError(source + ": missing header row");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_csv(in, path);
}

std::vector<EdgeRecord> read_edges(const CsvTable& t) {
  const int src = t.column("src");
  const int dst = t.column("dst");
  if (src < 0 || dst < 0 || t.header.size() != 2) {
    throw InputError(t.source + ": edge list header must be 'src,dst'");
  }
  std::vector<EdgeRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EdgeRecord e{t.rows[r][static_cast<std::size_t>(src)], t.rows[r][static_cast<std::size_t>(dst)]};
    if (e.src.empty()) throw InputError(cell_where(t, r, "src") + ": empty node ID");
    if (e.dst.empty()) throw InputError(cell_where(t, r, "dst") + ": empty node ID");
    if (e.src == e.dst) throw InputError(t.source + " line " + std::to_string(t.line_numbers[r]) + ": self-loop on " + e.src);
    out.push_back(std::move(e));
  }
  return out;
}

NodeTable read_nodes(const CsvTable& t) {
  const int id = t.column("id");
  const int a = t.column("A");
  const int c = t.column("C");
  const int y = t.column("Y");
  for (auto [name, col] : {std::pair{"id", id}, {"A", a}, {"C", c}, {"Y", y}}) {
    if (col < 0) throw InputError(t.source + ": missing column '" + std::string(name) + "'");
  }
  std::vector<int> z_cols;
  NodeTable out;
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    const std::string& h = t.header[k];
    if (h.rfind("Z_", 0) == 0 && h.size() > 2) {
      z_cols.push_back(static_cast<int>(k));
      out.data.covariate_names.push_back(h.substr(2));
    } else if (h != "id" && h != "A" && h != "C" && h != "Y") {
      throw InputError(t.source + ": unexpected column '" + h + "' (covariates need the Z_ prefix)");
    }
  }
  const std::size_t n = t.rows.size();
  if (n == 0) throw InputError(t.source + ": no node rows");
  StudyData& d = out.data;
  d.exposure.resize(n);
  d.censored.resize(n);
  d.outcome.assign(n, std::nullopt);
  d.covariates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(z_cols.size()));
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 0; r < n; ++r) {
    const std::string& node = t.rows[r][static_cast<std::size_t>(id)];
    if (node.empty()) throw InputError(cell_where(t, r, "id") + ": empty node ID");
    if (!seen.emplace(node, r).second) throw InputError(cell_where(t, r, "id") + ": duplicate node ID '" + node + "'");
    out.ids.push_back(node);
    d.exposure[r] = parse_binary(t, r, a);
    d.censored[r] = parse_binary(t, r, c);
    const std::string& yv = t.rows[r][static_cast<std::size_t>(y)];
    if (d.censored[r]) {
      if (!yv.empty()) throw InputError(cell_where(t, r, "Y") + ": outcome present for a censored node");
    } else {
      if (yv.empty()) throw InputError(cell_where(t, r, "Y") + ": outcome missing for an uncensored node");
      d.outcome[r] = parse_double(t, r, y);
    }
    for (std::size_t k = 0; k < z_cols.size(); ++k) {
      d.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = parse_double(t, r, z_cols[k]);
    }
  }
  d.validate();
  return out;
}

StudyInput assemble_study(const std::vector<EdgeRecord>& edges, NodeTable nodes) {
  std::unordered_map<std::string, NodeId> index;
  for (std::size_t i = 0; i < nodes.ids.size(); ++i) index.emplace(nodes.ids[i], static_cast<NodeId>(i));
  std::vector<Edge> list;
  list.reserve(edges.size());
  for (const auto& e : edges) {
    const auto u = index.find(e.src);
    const auto v = index.find(e.dst);
    if (u == index.end()) throw InputError("edge endpoint '" + e.src + "' is not in the node table");
    if (v == index.end()) throw InputError("edge endpoint '" + e.dst + "' is not in the node table");
    list.push_back({u->second, v->second});
  }
  StudyInput out;
  out.network = Network::build(nodes.ids.size(), list);
  out.ids = std::move(nodes.ids);
  out.data = std::move(nodes.data);
  return out;
}

EdgeNetwork network_from_edges(const std::vector<EdgeRecord>& edges) {
  EdgeNetwork out;
  std::unordered_map<std::string, NodeId> index;
  auto lookup = [&](const std::string& id) {
    const auto [it, inserted] = index.emplace(id, static_cast<NodeId>(out.ids.size()));
    if (inserted) out.ids.push_back(id);
    return it->second;
  };
  std::vector<Edge> list;
  list.reserve(edges.size());
  for (const auto& e : edges) {
    const NodeId u = lookup(e.src);
    const NodeId v = lookup(e.dst);
    list.push_back({u, v});
  }
  out.network = Network::build(out.ids.size(), list);
  return out;
}

void write_partition_csv(std::ostream& out, const std::vector<std::string>& ids, const Partition& partition) {
  if (ids.size() != partition.size()) throw InputError("partition does not match the node list");
  out << "node,community\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << partition.labels[i] << '\n';
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw InputError("failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

}  // namespace netspill
