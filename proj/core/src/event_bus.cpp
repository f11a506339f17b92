#include "solvita/event_bus.hpp"

namespace solvita {

namespace {

std::uint64_t fnv64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

} // namespace

std::string to_string(AttackRoute route) {
    switch (route) {
    case AttackRoute::semantic: return "semantic";
    case AttackRoute::stress: return "stress";
    case AttackRoute::antihash: return "antihash";
    }
    throw std::logic_error("unreachable attack route");
}

AttackRoute attack_route_from_string(const std::string& text) {
    if (text == "semantic") return AttackRoute::semantic;
    if (text == "stress") return AttackRoute::stress;
    if (text == "antihash" || text == "anti_hash") return AttackRoute::antihash;
    throw std::invalid_argument("unknown attack route: " + text);
}

const std::vector<MemoryNamespace>& EventBus::delivery_order() {
    static const std::vector<MemoryNamespace> order = {
        MemoryNamespace::plan, MemoryNamespace::solve, MemoryNamespace::oracle,
        MemoryNamespace::hack};
    return order;
}

void EventBus::subscribe(MemoryNamespace ns, Handler handler) {
    std::lock_guard lock(mutex_);
    handlers_[ns].push_back(std::move(handler));
}

std::size_t EventBus::emit_break(const BreakEvent& event) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(event.problem_id, fnv64(event.breaking_input));
    if (!seen_.insert(key).second) {
        return 0; // duplicate (problem, input): already delivered once
    }
    if (closed_) {
        buffer_.push_back(event);
        return 0;
    }
    return deliver(event);
}

std::size_t EventBus::deliver(const BreakEvent& event) {
    std::size_t deliveries = 0;
    for (MemoryNamespace ns : delivery_order()) {
        auto it = handlers_.find(ns);
        if (it == handlers_.end()) {
            continue;
        }
        for (const Handler& handler : it->second) {
            handler(ns, event);
            ++deliveries;
        }
    }
    return deliveries;
}

void EventBus::close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
}

void EventBus::open() {
    std::lock_guard lock(mutex_);
    closed_ = false;
}

std::size_t EventBus::flush() {
    std::lock_guard lock(mutex_);
    closed_ = false;
    std::size_t deliveries = 0;
    for (const BreakEvent& event : buffer_) {
        deliveries += deliver(event);
    }
    buffer_.clear();
    return deliveries;
}

bool EventBus::is_closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

std::size_t EventBus::buffered() const {
    std::lock_guard lock(mutex_);
    return buffer_.size();
}

} // namespace solvita
