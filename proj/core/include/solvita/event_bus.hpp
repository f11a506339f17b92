#pragma once

#include "solvita/feature_key.hpp"
#include "solvita/sandbox.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace solvita {

enum class AttackRoute { semantic, stress, antihash };

std::string to_string(AttackRoute route);
/// Accepts both the wire spelling "anti_hash" and the enum spelling.
AttackRoute attack_route_from_string(const std::string& text);

// A validator-accepted adversarial input on which the candidate failed.
// Broadcast once to each of the four role namespaces.
struct BreakEvent {
    std::string problem_id;
    AttackRoute route = AttackRoute::semantic;
    std::string breaking_input;
    VerdictKind verdict = VerdictKind::WA;
};

// Cross-agent failure propagation. Delivery is exactly-once per namespace per
// distinct (problem, input) pair, in a fixed namespace order for determinism.
// Emissions while the bus is closed are buffered and delivered on flush.
class EventBus {
public:
    using Handler = std::function<void(MemoryNamespace, const BreakEvent&)>;

    void subscribe(MemoryNamespace ns, Handler handler);

    /// Returns the number of namespace deliveries performed (0 for a
    /// duplicate, 4 for a fresh break with all roles subscribed).
    std::size_t emit_break(const BreakEvent& event);

    void close();
    void open();
    /// Delivers everything buffered while closed; returns deliveries made.
    std::size_t flush();

    bool is_closed() const;
    std::size_t buffered() const;

    /// Namespaces a break event fans out to, in delivery order.
    static const std::vector<MemoryNamespace>& delivery_order();

private:
    std::size_t deliver(const BreakEvent& event);

    mutable std::mutex mutex_;
    std::map<MemoryNamespace, std::vector<Handler>> handlers_;
    std::set<std::pair<std::string, std::uint64_t>> seen_;
    std::vector<BreakEvent> buffer_;
    bool closed_ = false;
};

} // namespace solvita
