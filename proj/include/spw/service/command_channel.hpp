#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

#include "spw/service/control_service.hpp"

namespace spw::svc {

// Fan-out of delivered samples to stream subscribers. Thread-safe.
class SampleBus {
public:
    class Subscription {
    public:
        // Waits up to `timeout` for the next sample.
        std::optional<DeliveredSample> next(std::chrono::milliseconds timeout);
        void close();

    private:
        friend class SampleBus;
        std::mutex mutex_;
        std::condition_variable cv_;
        std::deque<DeliveredSample> queue_;
        bool closed_ = false;
    };

    std::shared_ptr<Subscription> subscribe();
    void publish(const DeliveredSample& sample);
    void close_all();
    std::size_t subscriber_count();

private:
    static constexpr std::size_t kMaxBacklog = 1024;
    std::mutex mutex_;
    std::vector<std::weak_ptr<Subscription>> subscribers_;
};

// Owns the ControlService on a dedicated thread; every interaction with the
// simulation is a task posted here and executed in order. Optionally
// advances simulated time at a fixed rate between tasks.
class CommandChannel {
public:
    explicit CommandChannel(std::unique_ptr<ControlService> service, SampleBus* bus = nullptr);
    ~CommandChannel();
    CommandChannel(const CommandChannel&) = delete;
    CommandChannel& operator=(const CommandChannel&) = delete;

    template <class F>
    auto submit(F&& fn) -> std::future<std::invoke_result_t<F&, ControlService&>> {
        using R = std::invoke_result_t<F&, ControlService&>;
        auto task = std::make_shared<std::packaged_task<R()>>(
            [this, fn = std::forward<F>(fn)]() mutable { return fn(*service_); });
        auto future = task->get_future();
        post([task] { (*task)(); });
        return future;
    }

    template <class F>
    auto call(F&& fn) {
        return submit(std::forward<F>(fn)).get();
    }

    void set_auto_tick(bool enabled, double ticks_per_second = 50.0);

private:
    void post(std::function<void()> task);
    void run();

    std::unique_ptr<ControlService> service_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> tasks_;
    bool stopping_ = false;
    bool auto_tick_ = false;
    std::chrono::nanoseconds tick_interval_{20'000'000};
    std::thread worker_;
};

} // namespace spw::svc
