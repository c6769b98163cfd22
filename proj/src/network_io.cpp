#include "netid/network_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace netid {

namespace {

std::string field_after(const std::string& line, const std::string& key) {
    auto pos = line.find(key + "=");
    if (pos == std::string::npos)
        throw std::invalid_argument("missing '" + key + "=' in: " + line);
    pos += key.size() + 1;
    if (pos < line.size() && line[pos] == '[') {
        auto end = line.find(']', pos);
        if (end == std::string::npos) throw std::invalid_argument("unterminated list: " + line);
        return line.substr(pos, end - pos + 1);
    }
    auto end = line.find_first_of(" \t", pos);
    return line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

struct Stanza {
    std::string kind;
    std::vector<std::string> args;
    std::string line;
};

std::vector<Stanza> tokenize(std::istream& in) {
    std::vector<Stanza> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::stringstream ss(line);
        Stanza st;
        st.line = line;
        if (!(ss >> st.kind)) continue;
        if (st.kind == "[experiment]") {
            out.push_back(st);
            break;  // caller parses the rest
        }
        std::string tok;
        while (ss >> tok) st.args.push_back(tok);
        out.push_back(std::move(st));
    }
    return out;
}

}  // namespace

NetworkModel parse_network(std::istream& in) {
    auto stanzas = tokenize(in);

    int max_node = 0;
    for (const auto& st : stanzas)
        if (st.kind == "node" && !st.args.empty()) max_node = std::max(max_node, std::stoi(st.args[0]));
    if (max_node == 0) throw std::invalid_argument("network description declares no nodes");

    NetworkModel model(max_node);
    for (const auto& st : stanzas) {
        if (st.kind == "node" || st.kind == "[experiment]") continue;
        if (st.kind == "noise") {
            if (st.args.empty()) throw std::invalid_argument("noise stanza missing node id");
            const int id = std::stoi(st.args[0]);
            NoiseShape ns;
            ns.shaper = RationalTransfer(Polynomial(parse_coeff_list(field_after(st.line, "num"))),
                                         Polynomial(parse_coeff_list(field_after(st.line, "den"))));
            ns.variance = parse_double(field_after(st.line, "lambda"));
            model.set_noise(id, std::move(ns));
        } else if (st.kind == "edge") {
            if (st.args.size() < 2) throw std::invalid_argument("edge stanza needs <from> <to>");
            const int from = std::stoi(st.args[0]);
            const int to = std::stoi(st.args[1]);
            int delay = 0;
            if (st.line.find("delay=") != std::string::npos)
                delay = std::stoi(field_after(st.line, "delay"));
            model.set_module(to, from,
                             RationalTransfer(Polynomial(parse_coeff_list(field_after(st.line, "num"))),
                                              Polynomial(parse_coeff_list(field_after(st.line, "den"))),
                                              delay));
        } else if (st.kind == "excite") {
            if (st.args.size() < 2 || st.args[1] != "white")
                throw std::invalid_argument("excite stanza: only 'excite <id> white power=<v>' supported in files");
            model.set_excitation(std::stoi(st.args[0]),
                                 Excitation::white(parse_double(field_after(st.line, "power"))));
        } else {
            throw std::invalid_argument("unknown stanza '" + st.kind + "'");
        }
    }
    return model;
}

NetworkModel parse_network_string(const std::string& text) {
    std::istringstream ss(text);
    return parse_network(ss);
}

NetworkModel load_network(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open network file: " + path);
    return parse_network(f);
}

std::string dump_network(const NetworkModel& model) {
    std::string out;
    for (int j = 1; j <= model.node_count(); ++j) out += "node " + std::to_string(j) + "\n";
    for (int j = 1; j <= model.node_count(); ++j) {
        const auto& ns = model.noise(j);
        if (ns.variance > 0.0)
            out += "noise " + std::to_string(j) + " " + ns.shaper.serialize().substr(0, ns.shaper.serialize().rfind(" delay=")) +
                   " lambda=" + format_double(ns.variance) + "\n";
    }
    for (const auto& [key, tf] : model.modules())
        out += "edge " + std::to_string(key.second) + " " + std::to_string(key.first) + " " +
               tf.serialize() + "\n";
    for (int j = 1; j <= model.node_count(); ++j) {
        const auto& ex = model.excitation(j);
        if (ex.kind == Excitation::Kind::white)
            out += "excite " + std::to_string(j) + " white power=" + format_double(ex.power) + "\n";
    }
    return out;
}

std::string record_to_csv(const SignalRecord& rec) {
    const int L = static_cast<int>(rec.w.size());
    std::string out = "t";
    for (int j = 1; j <= L; ++j) out += ",w" + std::to_string(j);
    for (int j = 1; j <= L; ++j) out += ",r" + std::to_string(j);
    out += "\n";
    for (int t = 0; t < rec.sample_count; ++t) {
        out += format_double(static_cast<double>(t) * rec.sample_time);
        for (int j = 0; j < L; ++j)
            out += "," + format_double(rec.w[static_cast<size_t>(j)][static_cast<size_t>(t)]);
        for (int j = 0; j < L; ++j)
            out += "," + format_double(rec.r[static_cast<size_t>(j)][static_cast<size_t>(t)]);
        out += "\n";
    }
    return out;
}

SignalRecord record_from_csv(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw std::invalid_argument("empty record CSV");
    int L = 0;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ','))
            if (!col.empty() && col[0] == 'w') ++L;
    }
    if (L == 0) throw std::invalid_argument("record CSV has no w columns");

    SignalRecord rec;
    rec.w.assign(static_cast<size_t>(L), {});
    rec.r.assign(static_cast<size_t>(L), {});
    rec.e.assign(static_cast<size_t>(L), {});
    std::string line;
    double t0 = 0.0, t1 = 0.0;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(parse_double(cell));
        if (static_cast<int>(vals.size()) != 1 + 2 * L)
            throw std::invalid_argument("record CSV row has wrong column count");
        if (rows == 0) t0 = vals[0];
        if (rows == 1) t1 = vals[0];
        for (int j = 0; j < L; ++j) {
            rec.w[static_cast<size_t>(j)].push_back(vals[static_cast<size_t>(1 + j)]);
            rec.r[static_cast<size_t>(j)].push_back(vals[static_cast<size_t>(1 + L + j)]);
        }
        ++rows;
    }
    rec.sample_count = rows;
    rec.sample_time = rows > 1 ? t1 - t0 : 1.0;
    for (int j = 0; j < L; ++j)
        rec.e[static_cast<size_t>(j)].assign(static_cast<size_t>(rows), 0.0);
    return rec;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f << content;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace netid
