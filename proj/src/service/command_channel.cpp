#include "spw/service/command_channel.hpp"

#include <algorithm>

namespace spw::svc {

std::optional<DeliveredSample> SampleBus::Subscription::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) {
        return std::nullopt;
    }
    auto s = queue_.front();
    queue_.pop_front();
    return s;
}

void SampleBus::Subscription::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

std::shared_ptr<SampleBus::Subscription> SampleBus::subscribe() {
    auto sub = std::make_shared<Subscription>();
    std::lock_guard lock(mutex_);
    subscribers_.push_back(sub);
    return sub;
}

void SampleBus::publish(const DeliveredSample& sample) {
    std::lock_guard lock(mutex_);
    std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
    for (const auto& weak : subscribers_) {
        if (auto sub = weak.lock()) {
            {
                std::lock_guard sub_lock(sub->mutex_);
                if (sub->queue_.size() >= kMaxBacklog) {
                    sub->queue_.pop_front();
                }
                sub->queue_.push_back(sample);
            }
            sub->cv_.notify_one();
        }
    }
}

void SampleBus::close_all() {
    std::lock_guard lock(mutex_);
    for (const auto& weak : subscribers_) {
        if (auto sub = weak.lock()) {
            sub->close();
        }
    }
}

std::size_t SampleBus::subscriber_count() {
    std::lock_guard lock(mutex_);
    std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
    return subscribers_.size();
}

CommandChannel::CommandChannel(std::unique_ptr<ControlService> service, SampleBus* bus)
    : service_(std::move(service)) {
    if (bus != nullptr) {
        service_->simulation().set_sample_listener([bus](const DeliveredSample& s) { bus->publish(s); });
    }
    worker_ = std::thread([this] { run(); });
}

CommandChannel::~CommandChannel() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

void CommandChannel::set_auto_tick(bool enabled, double ticks_per_second) {
    {
        std::lock_guard lock(mutex_);
        auto_tick_ = enabled && ticks_per_second > 0;
        if (auto_tick_) {
            tick_interval_ = std::chrono::nanoseconds(static_cast<std::int64_t>(1e9 / ticks_per_second));
        }
    }
    cv_.notify_all();
}

void CommandChannel::post(std::function<void()> task) {
    {
        std::lock_guard lock(mutex_);
        tasks_.push_back(std::move(task));
    }
    cv_.notify_one();
}

void CommandChannel::run() {
    auto next_tick = std::chrono::steady_clock::now();
    std::unique_lock lock(mutex_);
    while (true) {
        if (auto_tick_) {
            cv_.wait_until(lock, next_tick, [&] { return stopping_ || !tasks_.empty(); });
        } else {
            cv_.wait(lock, [&] { return stopping_ || !tasks_.empty() || auto_tick_; });
            next_tick = std::chrono::steady_clock::now() + tick_interval_;
        }
        if (stopping_ && tasks_.empty()) {
            return;
        }
        while (!tasks_.empty()) {
            auto task = std::move(tasks_.front());
            tasks_.pop_front();
            lock.unlock();
            task();
            lock.lock();
        }
        if (auto_tick_ && std::chrono::steady_clock::now() >= next_tick) {
            lock.unlock();
            service_->tick(1);
            lock.lock();
            next_tick += tick_interval_;
            // Do not try to catch up after a long stall.
            next_tick = std::max(next_tick, std::chrono::steady_clock::now());
        }
    }
}

} // namespace spw::svc
