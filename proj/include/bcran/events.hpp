#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace bcran {

// Deterministic future-event list. Events that share a timestamp run in the
// order they were scheduled, so a (seed, config) pair fixes the whole trace.
class EventQueue {
 public:
    double now() const { return now_; }
    bool empty() const { return heap_.empty(); }
    std::size_t pending() const { return heap_.size(); }

    void schedule_at(double t, std::function<void()> fn) {
        if (!(t >= now_)) throw std::invalid_argument("EventQueue: cannot schedule in the past");
        heap_.push_back(Event{t, next_seq_++, std::move(fn)});
        std::push_heap(heap_.begin(), heap_.end(), Later{});
    }

    void schedule_in(double dt, std::function<void()> fn) { schedule_at(now_ + dt, std::move(fn)); }

    // Runs the earliest event. Returns false when the queue is empty.
    bool step() {
        if (heap_.empty()) return false;
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Event ev = std::move(heap_.back());
        heap_.pop_back();
        now_ = ev.at;
        ev.fn();
        return true;
    }

    // Runs every event with time <= t_end, then advances the clock to t_end.
    void run_until(double t_end) {
        while (!heap_.empty() && heap_.front().at <= t_end) step();
        now_ = std::max(now_, t_end);
    }

    void run_all() {
        while (step()) {
        }
    }

 private:
    struct Event {
        double at;
        uint64_t seq;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    std::vector<Event> heap_;
    double now_ = 0.0;
    uint64_t next_seq_ = 0;
};

}  // namespace bcran
