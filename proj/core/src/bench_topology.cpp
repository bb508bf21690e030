// Copyright 2026 The eovledger Authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "eov/bench/topology.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace eov::bench {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void syntax(std::size_t line, const std::string& msg)
{
    fail(Errc::TopologyError, "line " + std::to_string(line) + ": " + msg);
}

bool known_role(std::string_view role)
{
    if (role == "log") {
        return true;
    }
    try {
        parse_role(role);
        return true;
    } catch (const Error&) {
        return false;
    }
}

} // namespace

Topology Topology::parse(std::string_view text)
{
    Topology t;
    enum class Section { None, Global, Node } section = Section::None;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line == "[global]") {
                section = Section::Global;
            } else if (line == "[node]") {
                section = Section::Node;
                t.nodes.emplace_back();
            } else {
                syntax(line_no, "unknown section " + std::string(line));
            }
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            syntax(line_no, "expected key = value");
        }
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        try {
            if (section == Section::Global) {
                if (key == "scheme") {
                    t.scheme = parse_scheme(value);
                } else if (key == "seed") {
                    t.seed = std::stoull(value);
                } else {
                    syntax(line_no, "unknown global key " + key);
                }
            } else if (section == Section::Node) {
                auto& n = t.nodes.back();
                if (key == "id") {
                    n.id = value;
                } else if (key == "role") {
                    n.role = value;
                } else if (key == "address") {
                    n.address = value;
                } else if (key == "mode") {
                    n.mode = value;
                } else if (key == "public_key") {
                    n.public_key = from_hex(value);
                } else {
                    syntax(line_no, "unknown node key " + key);
                }
            } else {
                syntax(line_no, "key outside of a section");
            }
        } catch (const Error& e) {
            if (e.code() == Errc::TopologyError) throw;
            syntax(line_no, e.what());
        } catch (const std::logic_error&) {
            syntax(line_no, "bad value for " + key);
        }
    }

    std::set<std::string> ids;
    for (const auto& n : t.nodes) {
        if (n.id.empty()) {
            fail(Errc::TopologyError, "node without id");
        }
        if (!ids.insert(n.id).second) {
            fail(Errc::TopologyError, "duplicate node id " + n.id);
        }
        if (!known_role(n.role)) {
            fail(Errc::TopologyError, "node " + n.id + " has unknown role '" + n.role + "'");
        }
        if (n.mode != "inproc" && n.mode != "external") {
            fail(Errc::TopologyError, "node " + n.id + " has unknown mode '" + n.mode + "'");
        }
        if (n.role != "client" && n.address.empty()) {
            fail(Errc::TopologyError, "node " + n.id + " needs an address");
        }
        if (n.public_key && n.role != "log" && *n.public_key != t.keys_of(n.id).public_key) {
            fail(Errc::TopologyError, "public_key of " + n.id + " does not match the deployment seed");
        }
    }
    return t;
}

Topology Topology::load(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) {
        fail(Errc::TopologyError, "cannot read topology file " + path.string());
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

std::string Topology::to_text() const
{
    std::ostringstream out;
    out << "[global]\nscheme = " << to_string(scheme) << "\nseed = " << seed << "\n";
    for (const auto& n : nodes) {
        out << "\n[node]\nid = " << n.id << "\nrole = " << n.role << "\n";
        if (!n.address.empty()) {
            out << "address = " << n.address << "\n";
        }
        out << "mode = " << n.mode << "\n";
    }
    return out.str();
}

const TopologyNode* Topology::find(std::string_view id) const
{
    for (const auto& n : nodes) {
        if (n.id == id) {
            return &n;
        }
    }
    return nullptr;
}

std::vector<const TopologyNode*> Topology::with_role(std::string_view role) const
{
    std::vector<const TopologyNode*> out;
    for (const auto& n : nodes) {
        if (n.role == role) {
            out.push_back(&n);
        }
    }
    return out;
}

const TopologyNode& Topology::only(std::string_view role) const
{
    auto all = with_role(role);
    if (all.size() != 1) {
        fail(Errc::TopologyError, "topology needs exactly one " + std::string(role) + " node, has " +
                                      std::to_string(all.size()));
    }
    return *all.front();
}

KeyPair Topology::keys_of(std::string_view id) const
{
    return derive_node_keypair(scheme, seed, id);
}

std::shared_ptr<const Registry> Topology::registry() const
{
    Registry::Builder b(scheme);
    for (const auto& n : nodes) {
        if (n.role == "log") {
            continue;
        }
        b.add({n.id, parse_role(n.role), keys_of(n.id).public_key});
    }
    return b.build();
}

Topology default_topology(SignatureScheme scheme, std::uint64_t seed, std::size_t endorsers,
                          const std::string& transport)
{
    if (transport != "inproc" && transport != "tcp") {
        fail(Errc::TopologyError, "transport must be inproc or tcp");
    }
    Topology t;
    t.scheme = scheme;
    t.seed = seed;
    auto addr = [&](const std::string& id) {
        return transport == "tcp" ? std::string("tcp://127.0.0.1:0") : "inproc://" + id;
    };
    auto add = [&](std::string id, std::string role) {
        TopologyNode n;
        n.id = std::move(id);
        n.role = std::move(role);
        if (n.role != "client") {
            n.address = addr(n.id);
        }
        t.nodes.push_back(std::move(n));
    };
    add("log0", "log");
    add("orderer0", "orderer");
    add("committer0", "committer");
    add("store0", "blockstore");
    for (std::size_t i = 0; i < endorsers; ++i) {
        add("endorser" + std::to_string(i), "endorser");
    }
    add("client0", "client");
    return t;
}

} // namespace eov::bench
