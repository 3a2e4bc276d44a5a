#pragma once

#include "netspill/netgraph.hpp"
#include "netspill/study_data.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace netspill {

/// Comma-separated table with a header row. Fields may be double-quoted;
/// surrounding whitespace is trimmed and blank lines are skipped.
struct CsvTable {
  std::string source;  // file name used in error messages
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based line of each row

  /// Column index by name, or -1.
  int column(const std::string& name) const;
};

/// Throws InputError on a missing header or a row with the wrong field count.
CsvTable read_csv(std::istream& in, const std::string& source);
CsvTable read_csv_file(const std::string& path);

struct EdgeRecord {
  std::string src;
  std::string dst;
};

/// Columns `src,dst`; node IDs are arbitrary strings.
std::vector<EdgeRecord> read_edges(const CsvTable& table);

/// Node table with columns `id,A,C,Y,Z_*`. Y must be blank exactly when C = 1.
struct NodeTable {
  std::vector<std::string> ids;
  StudyData data;
};

NodeTable read_nodes(const CsvTable& table);

/// Network over the nodes of `nodes` (in file order). Every edge endpoint must
/// be a known ID.
struct StudyInput {
  std::vector<std::string> ids;
  Network network;
  StudyData data;
};

StudyInput assemble_study(const std::vector<EdgeRecord>& edges, NodeTable nodes);

/// Network over the edge endpoints, numbered by first appearance.
struct EdgeNetwork {
  std::vector<std::string> ids;
  Network network;
};

EdgeNetwork network_from_edges(const std::vector<EdgeRecord>& edges);

/// `node,community` rows in node order.
void write_partition_csv(std::ostream& out, const std::vector<std::string>& ids, const Partition& partition);

/// Writes to `path + ".tmp"` and renames over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

/// %.6g formatting used by every CSV writer.
std::string format_number(double value);

}  // namespace netspill
