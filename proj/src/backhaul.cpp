#include "uwoc/backhaul.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "uwoc/error.hpp"
#include "uwoc/ooc.hpp"
#include "uwoc/rng.hpp"

namespace uwoc::backhaul {

std::string to_string(PacketType type) {
  switch (type) {
    case PacketType::kMuAtUpdate: return "MU-AT-update";
    case PacketType::kHello: return "Hello";
    case PacketType::kHelloReply: return "Hello-reply";
    case PacketType::kNtBroadcast: return "NT-broadcast";
    case PacketType::kData: return "data";
  }
  return "unknown";
}

void Topology::add_edge(int a, int b) {
  if (a < 0 || b < 0) throw ParameterError("OBTS ids must be non-negative");
  if (a == b) throw ParameterError("self-loop in topology");
  const auto e = std::minmax(a, b);
  nodes.insert(a);
  nodes.insert(b);
  if (std::find(edges.begin(), edges.end(), std::pair<int, int>(e)) == edges.end()) edges.emplace_back(e);
}

bool Topology::connected() const {
  if (nodes.empty()) return true;
  std::map<int, std::vector<int>> adj;
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::set<int> reached{*nodes.begin()};
  std::vector<int> stack{*nodes.begin()};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (reached.insert(v).second) stack.push_back(v);
    }
  }
  return reached.size() == nodes.size();
}

Topology read_topology(std::istream& is) {
  Topology t;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = line.substr(0, line.find('#'));
    std::istringstream ls(line);
    int a, b;
    if (!(ls >> a)) continue;
    if (!(ls >> b)) throw ParameterError("topology line " + std::to_string(line_no) + ": expected two OBTS ids");
    std::string extra;
    if (ls >> extra) throw ParameterError("topology line " + std::to_string(line_no) + ": trailing data");
    t.add_edge(a, b);
  }
  return t;
}

void write_topology(std::ostream& os, const Topology& topology) {
  for (const auto& [a, b] : topology.edges) os << a << ' ' << b << '\n';
}

Network::Network(const Topology& topology, const NetworkConfig& config) : config_(config) {
  if (!(config.link_delay > 0)) throw ParameterError("link delay must be positive");
  for (int id : topology.nodes) nodes_[id].id = id;
  for (const auto& [a, b] : topology.edges) {
    nodes_[a].ports.push_back(b);
    nodes_[b].ports.push_back(a);
  }
  for (auto& [id, n] : nodes_) std::sort(n.ports.begin(), n.ports.end());
  if (config.architecture == Architecture::kCentralized) {
    auto it = nodes_.find(config.onc_attachment);
    if (it == nodes_.end()) throw ParameterError("ONC attachment OBTS not in topology");
    it->second.ports.push_back(kOncId);
  }
}

const ObtsNode& Network::node(int id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw LookupError("unknown OBTS " + std::to_string(id));
  return it->second;
}

std::optional<int> Network::location_view(int id, int mu) const {
  const auto& n = node(id);
  auto it = n.locations.find(mu);
  if (it == n.locations.end()) return std::nullopt;
  return it->second.obts;
}

long long Network::flood_transmissions(int source, std::uint64_t number) const {
  auto it = flood_tx_.find({source, number});
  return it == flood_tx_.end() ? 0 : it->second;
}

void Network::schedule(double time, int node, int port, int timer, Packet packet) {
  queue_.push(Event{time, seq_++, node, port, timer, std::move(packet)});
}

std::pair<int, int> Network::peer(int node, int port) const {
  if (node == kOncId) {
    const auto& ports = nodes_.at(config_.onc_attachment).ports;
    return {config_.onc_attachment, static_cast<int>(std::find(ports.begin(), ports.end(), kOncId) - ports.begin())};
  }
  const int other = nodes_.at(node).ports.at(static_cast<std::size_t>(port));
  if (other == kOncId) return {kOncId, 0};
  const auto& ports = nodes_.at(other).ports;
  return {other, static_cast<int>(std::find(ports.begin(), ports.end(), node) - ports.begin())};
}

void Network::record(int node, const std::string& event, const Packet& p) {
  if (config_.record_trace) trace_.push_back({now_, node, event, p.type, p.source, p.number});
}

void Network::transmit(int node, int port, const Packet& packet) {
  record(node, "send", packet);
  if (!packet.routed && (packet.type == PacketType::kNtBroadcast || packet.type == PacketType::kMuAtUpdate)) {
    ++flood_tx_[{packet.source, packet.number}];
  }
  const auto [other, other_port] = peer(node, port);
  schedule(now_ + config_.link_delay, other, other_port, -1, packet);
}

void Network::start_discovery() {
  for (auto& [id, n] : nodes_) {
    for (std::size_t port = 0; port < n.ports.size(); ++port) {
      if (n.ports[port] == kOncId) continue;
      Packet hello;
      hello.type = PacketType::kHello;
      hello.source = id;
      hello.number = n.next_number++;
      transmit(id, static_cast<int>(port), hello);
    }
  }
  for (auto& [id, n] : nodes_) {
    Packet round;
    round.number = 0;
    schedule(now_ + 3.0 * config_.link_delay, id, -1, kNtTimer, round);
  }
}

void Network::originate_flood(int node, Packet packet) {
  auto& n = nodes_.at(node);
  packet.source = node;
  packet.number = n.next_number++;
  packet.routed = false;
  n.seen.insert({packet.source, packet.number});
  record(node, "process", packet);
  for (std::size_t port = 0; port < n.ports.size(); ++port) {
    if (n.ports[port] != kOncId) transmit(node, static_cast<int>(port), packet);
  }
}

bool Network::register_mu(int obts, int mu) {
  auto& n = nodes_.at(obts);
  if (n.mu_at.count(mu)) return false;
  n.mu_at.insert(mu);
  const MuLocation loc{obts, ++epochs_[mu]};
  n.locations[mu] = loc;
  Packet update;
  update.type = PacketType::kMuAtUpdate;
  update.mu = mu;
  update.location = loc;
  if (config_.architecture == Architecture::kDecentralized) {
    originate_flood(obts, update);
  } else {
    update.source = obts;
    update.number = n.next_number++;
    update.routed = true;
    update.target = kOncId;
    route(obts, update);
  }
  return true;
}

int Network::send_data(int src, int mu) {
  auto& n = nodes_.at(src);
  Packet data;
  data.type = PacketType::kData;
  data.source = src;
  data.mu = mu;
  data.routed = true;
  data.path = {src};
  if (n.mu_at.count(mu)) {
    data.target = src;
  } else if (config_.architecture == Architecture::kDecentralized) {
    auto it = n.locations.find(mu);
    if (it == n.locations.end()) throw LookupError("no location known for MU " + std::to_string(mu));
    data.target = it->second.obts;
  } else {
    data.target = kOncId;
  }
  data.number = n.next_number++;
  data.data_id = static_cast<int>(deliveries_.size());
  deliveries_.push_back(Delivery{data.data_id, mu, {}, false, false, false, now_});
  route(src, data);
  return data.data_id;
}

std::vector<int> Network::forward_data(int src, int mu) {
  const int id = send_data(src, mu);
  run();
  const auto& d = deliveries_.at(static_cast<std::size_t>(id));
  if (d.lookup_failed) throw LookupError("ONC has no location for MU " + std::to_string(mu));
  return d.path;
}

void Network::route(int node, Packet packet) {
  auto& n = nodes_.at(node);
  if (packet.target == node) {
    if (packet.type == PacketType::kData) {
      auto& d = deliveries_.at(static_cast<std::size_t>(packet.data_id));
      d.path = packet.path;
      d.time = now_;
      if (n.mu_at.count(packet.mu)) {
        d.delivered = true;
        record(node, "deliver", packet);
      } else {
        d.misdelivered = true;
        record(node, "misdeliver", packet);
      }
    } else {
      record(node, "process", packet);
      apply_location(n, packet.mu, packet.location, packet.removal);
    }
    return;
  }
  int port = -1;
  if (packet.target == kOncId && node == config_.onc_attachment) {
    port = static_cast<int>(std::find(n.ports.begin(), n.ports.end(), kOncId) - n.ports.begin());
  } else {
    const int dest = packet.target == kOncId ? config_.onc_attachment : packet.target;
    auto it = n.rt.find(dest);
    if (it != n.rt.end()) port = it->second;
  }
  if (port < 0) {
    record(node, "drop", packet);
    return;
  }
  transmit(node, port, packet);
}

void Network::apply_location(ObtsNode& n, int mu, const MuLocation& loc, bool removal) {
  auto it = n.locations.find(mu);
  if (it != n.locations.end() && it->second.epoch >= loc.epoch) return;
  if (n.mu_at.count(mu) && (removal || loc.obts != n.id)) n.mu_at.erase(mu);
  n.locations[mu] = loc;
}

void Network::process_flood(ObtsNode& n, const Packet& p) {
  if (p.type == PacketType::kNtBroadcast) {
    n.topology_view[p.source] = p.neighbors;
    compute_rt(n);
  } else {
    apply_location(n, p.mu, p.location, p.removal);
  }
}

void Network::compute_rt(ObtsNode& n) {
  std::map<int, std::set<int>> adj;
  auto link = [&](int a, int b) {
    adj[a].insert(b);
    adj[b].insert(a);
  };
  for (const auto& [nb, port] : n.nt) link(n.id, nb);
  for (const auto& [origin, list] : n.topology_view) {
    for (int nb : list) link(origin, nb);
  }
  // Lexicographic (hops, first-hop id) labels: ties go to the lowest neighbor.
  using Label = std::pair<int, int>;
  std::map<int, Label> best;
  std::priority_queue<std::pair<Label, int>, std::vector<std::pair<Label, int>>, std::greater<>> frontier;
  best[n.id] = {0, -1};
  frontier.push({{0, -1}, n.id});
  while (!frontier.empty()) {
    const auto [label, u] = frontier.top();
    frontier.pop();
    if (best[u] != label) continue;
    for (int v : adj[u]) {
      if (u == n.id && !n.nt.count(v)) continue;
      const Label next{label.first + 1, u == n.id ? v : label.second};
      auto it = best.find(v);
      if (it == best.end() || next < it->second) {
        best[v] = next;
        frontier.push({next, v});
      }
    }
  }
  n.rt.clear();
  for (const auto& [dest, label] : best) {
    if (dest != n.id) n.rt[dest] = n.nt.at(label.second);
  }
}

void Network::handle_onc(const Event& e) {
  Packet p = e.packet;
  record(kOncId, "receive", p);
  if (p.type == PacketType::kMuAtUpdate) {
    record(kOncId, "process", p);
    auto it = onc_.find(p.mu);
    if (it != onc_.end() && it->second.epoch >= p.location.epoch) return;
    const bool handover = it != onc_.end() && it->second.obts != p.location.obts;
    const int old = handover ? it->second.obts : -1;
    onc_[p.mu] = p.location;
    if (handover) {
      Packet removal;
      removal.type = PacketType::kMuAtUpdate;
      removal.source = kOncId;
      removal.number = onc_number_++;
      removal.mu = p.mu;
      removal.location = p.location;
      removal.removal = true;
      removal.routed = true;
      removal.target = old;
      transmit(kOncId, 0, removal);
    }
    return;
  }
  if (p.type == PacketType::kData) {
    p.path.push_back(kOncId);
    auto it = onc_.find(p.mu);
    if (it == onc_.end()) {
      auto& d = deliveries_.at(static_cast<std::size_t>(p.data_id));
      d.lookup_failed = true;
      d.path = p.path;
      d.time = now_;
      record(kOncId, "lookup-failure", p);
      return;
    }
    p.target = it->second.obts;
    transmit(kOncId, 0, p);
  }
}

void Network::handle(const Event& e) {
  if (e.node == kOncId) {
    handle_onc(e);
    return;
  }
  auto& n = nodes_.at(e.node);
  if (e.port < 0) {
    Packet nt;
    nt.type = PacketType::kNtBroadcast;
    for (const auto& [nb, port] : n.nt) nt.neighbors.push_back(nb);
    n.topology_view[n.id] = nt.neighbors;
    compute_rt(n);
    originate_flood(n.id, nt);
    if (static_cast<int>(e.packet.number) + 1 < config_.nt_rounds) {
      Packet round;
      round.number = e.packet.number + 1;
      schedule(now_ + config_.nt_period, n.id, -1, kNtTimer, round);
    }
    return;
  }
  Packet p = e.packet;
  record(n.id, "receive", p);
  switch (p.type) {
    case PacketType::kHello: {
      Packet reply;
      reply.type = PacketType::kHelloReply;
      reply.source = n.id;
      reply.number = n.next_number++;
      transmit(n.id, e.port, reply);
      return;
    }
    case PacketType::kHelloReply:
      n.nt[p.source] = e.port;
      compute_rt(n);
      return;
    default:
      break;
  }
  if (p.routed) {
    if (p.type == PacketType::kData) p.path.push_back(n.id);
    route(n.id, std::move(p));
    return;
  }
  if (!n.seen.insert({p.source, p.number}).second) {
    record(n.id, "drop", p);
    return;
  }
  record(n.id, "process", p);
  process_flood(n, p);
  for (std::size_t port = 0; port < n.ports.size(); ++port) {
    if (static_cast<int>(port) != e.port && n.ports[port] != kOncId) transmit(n.id, static_cast<int>(port), p);
  }
}

void Network::run(double until) {
  while (!queue_.empty() && (until < 0 || queue_.top().time <= until)) {
    Event e = queue_.top();
    queue_.pop();
    now_ = e.time;
    handle(e);
  }
}

void write_trace(std::ostream& os, const std::vector<TraceEvent>& trace) {
  for (const auto& t : trace) {
    os << t.time << ',' << t.node << ',' << t.event << ',' << to_string(t.type) << ',' << t.source << ',' << t.number
       << '\n';
  }
}

Topology random_topology(int nodes, double extra_edge_probability, std::uint64_t seed) {
  if (nodes < 1) throw ParameterError("topology needs at least one node");
  Topology t;
  t.nodes.insert(0);
  Rng rng = make_stream(seed, 0);
  for (int i = 1; i < nodes; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    t.add_edge(parent(rng), i);
  }
  for (int a = 0; a < nodes; ++a) {
    for (int b = a + 1; b < nodes; ++b) {
      if (uniform01(rng) < extra_edge_probability) t.add_edge(a, b);
    }
  }
  return t;
}

Topology hex_topology(int rings) {
  const auto adj = ooc::hex_grid_adjacency(rings);
  Topology t;
  t.nodes.insert(0);
  for (std::size_t a = 0; a < adj.size(); ++a) {
    for (int b : adj[a]) {
      if (static_cast<int>(a) < b) t.add_edge(static_cast<int>(a), b);
    }
  }
  return t;
}

}  // namespace uwoc::backhaul
