#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace uwoc::backhaul {

enum class PacketType { kMuAtUpdate, kHello, kHelloReply, kNtBroadcast, kData };
enum class Architecture { kCentralized, kDecentralized };

std::string to_string(PacketType type);

/// Undirected OBTS adjacency; node ids are arbitrary non-negative integers.
struct Topology {
  std::set<int> nodes;
  std::vector<std::pair<int, int>> edges;

  void add_edge(int a, int b);
  std::size_t edge_count() const { return edges.size(); }
  bool connected() const;
};

/// Edge list, one "obts_id obts_id" pair per line; '#' starts a comment.
Topology read_topology(std::istream& is);
void write_topology(std::ostream& os, const Topology& topology);

/// Node id of the ONC in paths and traces.
inline constexpr int kOncId = -1;

struct MuLocation {
  int obts = 0;
  std::uint64_t epoch = 0;  // registration sequence number of the MU
};

struct Packet {
  PacketType type = PacketType::kData;
  int source = 0;
  std::uint64_t number = 0;
  // MU-AT update: MU, serving OBTS, registration epoch, removal flag.
  int mu = -1;
  MuLocation location;
  bool removal = false;
  bool routed = false;  // unicast along routing tables rather than flooded
  // NT broadcast: neighbor ids of the source.
  std::vector<int> neighbors;
  // Routed packets: next routing target (OBTS id or kOncId) and data bookkeeping.
  int target = 0;
  int data_id = -1;
  std::vector<int> path;
};

struct ObtsNode {
  int id = 0;
  std::vector<int> ports;                  // port -> neighbor id (kOncId for the ONC link)
  std::set<int> mu_at;                     // served MUs
  std::map<int, int> nt;                   // neighbor id -> port
  std::map<int, int> rt;                   // destination OBTS -> output port
  std::set<std::pair<int, std::uint64_t>> seen;
  std::map<int, std::vector<int>> topology_view;  // NT reports by origin
  std::map<int, MuLocation> locations;     // replicated MU view (decentralized)
  std::uint64_t next_number = 0;
};

struct TraceEvent {
  double time = 0.0;
  int node = 0;
  std::string event;  // send, receive, drop, process, deliver, misdeliver, lookup-failure
  PacketType type = PacketType::kData;
  int source = 0;
  std::uint64_t number = 0;
};

struct Delivery {
  int data_id = 0;
  int mu = 0;
  std::vector<int> path;
  bool delivered = false;
  bool misdelivered = false;
  bool lookup_failed = false;
  double time = 0.0;
};

struct NetworkConfig {
  Architecture architecture = Architecture::kDecentralized;
  double link_delay = 1.0;
  double nt_period = 100.0;
  int nt_rounds = 1;          // number of periodic NT broadcasts per node
  int onc_attachment = 0;     // OBTS hosting the ONC link (centralized)
  bool record_trace = true;
};

/// Discrete-event simulation of the OBTS backhaul. Events at equal times run
/// in insertion order.
class Network {
 public:
  Network(const Topology& topology, const NetworkConfig& config);

  /// Schedules Hello exchanges now and NT broadcasts after one round trip.
  void start_discovery();
  /// Registers an MU at an OBTS; returns false for a repeated registration
  /// at the same OBTS (no signaling is emitted).
  bool register_mu(int obts, int mu);
  /// Injects a data packet for `mu` at `src`; returns its id. Decentralized
  /// sends throw LookupError when the source has no location for the MU.
  int send_data(int src, int mu);
  /// Sends and runs to quiescence; returns the traversed node sequence.
  /// Throws LookupError for unknown MUs.
  std::vector<int> forward_data(int src, int mu);

  /// Processes events up to and including `until` (all events by default).
  void run(double until = -1.0);
  bool idle() const { return queue_.empty(); }
  double now() const { return now_; }

  const ObtsNode& node(int id) const;
  const std::map<int, ObtsNode>& nodes() const { return nodes_; }
  const std::map<int, MuLocation>& onc_database() const { return onc_; }
  /// MU -> serving OBTS as seen by `id` (decentralized replica).
  std::optional<int> location_view(int id, int mu) const;
  const std::vector<TraceEvent>& trace() const { return trace_; }
  const std::vector<Delivery>& deliveries() const { return deliveries_; }
  /// Link transmissions caused by the flood (source, number).
  long long flood_transmissions(int source, std::uint64_t number) const;
  const Architecture& architecture() const { return config_.architecture; }

 private:
  struct Event {
    double time;
    std::uint64_t seq;
    int node;
    int port;       // arrival port, -1 for timers
    int timer;      // timer kind when port < 0
    Packet packet;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  enum Timer { kNtTimer = 0 };

  void schedule(double time, int node, int port, int timer, Packet packet);
  void transmit(int node, int port, const Packet& packet);
  void originate_flood(int node, Packet packet);
  void handle(const Event& e);
  void handle_onc(const Event& e);
  void process_flood(ObtsNode& n, const Packet& p);
  void route(int node, Packet packet);
  void compute_rt(ObtsNode& n);
  void apply_location(ObtsNode& n, int mu, const MuLocation& loc, bool removal);
  void record(int node, const std::string& event, const Packet& p);
  std::pair<int, int> peer(int node, int port) const;

  NetworkConfig config_;
  std::map<int, ObtsNode> nodes_;
  std::map<int, MuLocation> onc_;
  std::uint64_t onc_number_ = 0;
  std::map<int, std::uint64_t> epochs_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  std::vector<TraceEvent> trace_;
  std::vector<Delivery> deliveries_;
  std::map<std::pair<int, std::uint64_t>, long long> flood_tx_;
};

/// CSV lines: time, node, event_type, packet_type, source, number.
void write_trace(std::ostream& os, const std::vector<TraceEvent>& trace);

/// Random connected topology: a random spanning tree plus extra edges.
Topology random_topology(int nodes, double extra_edge_probability, std::uint64_t seed);

/// Hexagonal cluster of OBTSs (center plus rings), neighbors linked.
Topology hex_topology(int rings);

}  // namespace uwoc::backhaul
