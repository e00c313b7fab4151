#pragma once

// External driving agents run as child processes speaking newline-delimited
// JSON over stdin/stdout, strictly one observation out and one action in per
// tick. Malformed or late replies substitute Stop; three consecutive
// substitutions (or a dead process) end the run as a policy fault.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cornersim/perception.hpp"
#include "cornersim/policy.hpp"
#include "cornersim/version.hpp"

namespace cornersim {

struct AgentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline nlohmann::json observation_to_json(const Observation& obs) {
    nlohmann::json j;
    j["tick"] = obs.tick;
    j["ego"] = {{"x", obs.ego_pose.x},
                {"y", obs.ego_pose.y},
                {"heading", obs.ego_pose.heading},
                {"speed", obs.ego_speed},
                {"steer", obs.ego_steer}};
    j["lidar"] = obs.lidar;
    nlohmann::json dets = nlohmann::json::array();
    for (const auto& d : obs.detections) {
        dets.push_back({{"id", d.handle},
                        {"class", to_token(d.apparent_class)},
                        {"x", d.relative_position.x},
                        {"y", d.relative_position.y},
                        {"heading", d.relative_heading},
                        {"length", d.length},
                        {"width", d.width},
                        {"range_rate", d.relative_speed},
                        {"distance", d.distance}});
    }
    j["detections"] = std::move(dets);
    j["weather"] = obs.weather_id;
    j["goal"] = {{"bearing", obs.goal_bearing}, {"distance", obs.goal_distance}};
    return j;
}

inline std::optional<EgoAction> action_from_json(const nlohmann::json& payload) {
    if (payload.contains("discrete")) {
        if (!payload["discrete"].is_string()) return std::nullopt;
        const auto a = discrete_from_token(payload["discrete"].get<std::string>());
        if (!a) return std::nullopt;
        return EgoAction::of(*a);
    }
    if (payload.contains("throttle") || payload.contains("brake") || payload.contains("steer")) {
        ContinuousControl c;
        if (payload.contains("throttle")) {
            if (!payload["throttle"].is_number()) return std::nullopt;
            c.throttle = payload["throttle"].get<double>();
        }
        if (payload.contains("brake")) {
            if (!payload["brake"].is_number()) return std::nullopt;
            c.brake = payload["brake"].get<double>();
        }
        if (payload.contains("steer")) {
            if (!payload["steer"].is_number()) return std::nullopt;
            c.steer = payload["steer"].get<double>();
        }
        return EgoAction::of(c);
    }
    return std::nullopt;
}

/// Child process handle with line-oriented, timeout-guarded exchange.
class AgentProcess {
public:
    AgentProcess(const std::string& command, double handshake_timeout_s, int tick_timeout_ms)
        : tick_timeout_ms_(tick_timeout_ms) {
        int to_child[2];
        int from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0) {
            throw AgentError("pipe failed: " + std::string(std::strerror(errno)));
        }
        pid_ = fork();
        if (pid_ < 0) throw AgentError("fork failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_fd_ = from_child[0];
        out_fd_ = to_child[1];
        fcntl(in_fd_, F_SETFL, O_NONBLOCK);

        // Handshake: hello out, hello back with a compatible version.
        nlohmann::json hello = {{"type", "hello"},
                                {"schema_version", kAgentProtocolVersion},
                                {"engine_version", kEngineVersion},
                                {"lidar_rays", kLidarRayCount},
                                {"action_modes", {"discrete", "continuous"}}};
        if (!send_line(hello.dump())) throw AgentError("agent closed stdin during handshake");
        const auto reply = read_line(static_cast<int>(handshake_timeout_s * 1000.0));
        if (!reply) throw AgentError("agent handshake timed out or stream closed");
        try {
            const auto j = nlohmann::json::parse(*reply);
            if (j.value("type", "") != "hello" ||
                j.value("schema_version", -1) != kAgentProtocolVersion) {
                throw AgentError("agent handshake rejected: " + *reply);
            }
        } catch (const nlohmann::json::exception&) {
            throw AgentError("agent handshake was not valid JSON");
        }
    }

    AgentProcess(const AgentProcess&) = delete;
    AgentProcess& operator=(const AgentProcess&) = delete;

    ~AgentProcess() { shutdown(); }

    struct Exchange {
        EgoAction action;
        bool substituted = false;  // Stop injected (timeout/garbage)
        bool process_dead = false;
    };

    /// One lockstep exchange. Never throws after the handshake; failures
    /// degrade to a substituted Stop or a dead-process flag.
    Exchange exchange(const Observation& obs) {
        Exchange result;
        result.action = EgoAction::of(DiscreteAction::Stop);
        nlohmann::json msg = {{"type", "observation"},
                              {"tick", obs.tick},
                              {"payload", observation_to_json(obs)}};
        if (!send_line(msg.dump())) {
            result.process_dead = true;
            return result;
        }
        const auto line = read_line(tick_timeout_ms_);
        if (!line) {
            if (stream_closed_) {
                result.process_dead = true;
            } else {
                result.substituted = true;  // late reply
            }
            return result;
        }
        try {
            const auto j = nlohmann::json::parse(*line);
            if (j.value("type", "") != "action" ||
                j.value("tick", static_cast<long>(-1)) != obs.tick || !j.contains("payload")) {
                result.substituted = true;
                return result;
            }
            const auto action = action_from_json(j["payload"]);
            if (!action) {
                result.substituted = true;
                return result;
            }
            result.action = *action;
        } catch (const nlohmann::json::exception&) {
            result.substituted = true;
        }
        return result;
    }

    void send_end(long tick, const std::string& reason) {
        nlohmann::json msg = {{"type", "end"}, {"tick", tick}, {"payload", {{"reason", reason}}}};
        send_line(msg.dump());
    }

    void shutdown() {
        if (out_fd_ >= 0) {
            close(out_fd_);
            out_fd_ = -1;
        }
        if (in_fd_ >= 0) {
            close(in_fd_);
            in_fd_ = -1;
        }
        if (pid_ > 0) {
            // Give the agent a moment to exit, then insist.
            for (int i = 0; i < 20; ++i) {
                int status = 0;
                const pid_t r = waitpid(pid_, &status, WNOHANG);
                if (r == pid_) {
                    pid_ = -1;
                    return;
                }
                usleep(10000);
            }
            kill(pid_, SIGKILL);
            waitpid(pid_, nullptr, 0);
            pid_ = -1;
        }
    }

private:
    bool send_line(const std::string& line) {
        std::string buf = line;
        buf.push_back('\n');
        size_t off = 0;
        while (off < buf.size()) {
            const ssize_t n = write(out_fd_, buf.data() + off, buf.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            off += static_cast<size_t>(n);
        }
        return true;
    }

    std::optional<std::string> read_line(int timeout_ms) {
        const auto deadline =
            std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            const auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            const auto now = std::chrono::steady_clock::now();
            if (now >= deadline) return std::nullopt;
            const int wait_ms = static_cast<int>(
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
            pollfd pfd{in_fd_, POLLIN, 0};
            const int pr = poll(&pfd, 1, std::max(1, wait_ms));
            if (pr < 0) {
                if (errno == EINTR) continue;
                stream_closed_ = true;
                return std::nullopt;
            }
            if (pr == 0) return std::nullopt;  // timeout
            char chunk[4096];
            const ssize_t n = read(in_fd_, chunk, sizeof(chunk));
            if (n > 0) {
                buffer_.append(chunk, static_cast<size_t>(n));
            } else if (n == 0) {
                stream_closed_ = true;
                return std::nullopt;
            } else if (errno != EAGAIN && errno != EINTR) {
                stream_closed_ = true;
                return std::nullopt;
            }
        }
    }

    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    int tick_timeout_ms_ = 50;
    std::string buffer_;
    bool stream_closed_ = false;
};

}  // namespace cornersim
