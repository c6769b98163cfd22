#ifndef NETID_NETWORK_IO_HPP
#define NETID_NETWORK_IO_HPP

#include <iosfwd>
#include <string>

#include "netid/network.hpp"

namespace netid {

/// Plain structured-text network description, one stanza per element:
///   node <id>
///   noise <id> num=[...] den=[...] lambda=<v>
///   edge <from> <to> num=[...] den=[...] delay=<k>
///   excite <id> white power=<v>
/// `edge a b` defines the module from node a into node b (G_{b,a}).
/// Lines starting with '#' and blank lines are ignored. Parsing stops at an
/// `[experiment]` header so experiment configs can embed a network.
NetworkModel parse_network(std::istream& in);
NetworkModel parse_network_string(const std::string& text);
NetworkModel load_network(const std::string& path);

std::string dump_network(const NetworkModel& model);

/// CSV with header t,w1,...,wL,r1,...,rL, one row per sample.
std::string record_to_csv(const SignalRecord& rec);
SignalRecord record_from_csv(std::istream& in);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace netid

#endif
