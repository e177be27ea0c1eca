#pragma once

#include "jointcrm/io.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace jcrm {

struct Response {
    int status = 200;
    std::string body;
    std::string contentType = "application/json";
};

/// Live trial conduct. Each session is a TrialEngine whose transcript is
/// rewritten in the state directory after every cohort; sessions found there
/// are replayed on construction.
class ConductService {
public:
    explicit ConductService(std::filesystem::path stateDirectory, OptimizerSpec fitSpec = {});

    Response create(const std::string& body);
    Response submit(const std::string& id, const std::string& body);
    Response view(const std::string& id) const;
    Response transcript(const std::string& id) const;
    Response list() const;

    std::size_t size() const;

private:
    struct Session {
        std::string id;
        std::unique_ptr<TrialEngine> engine;
        mutable std::mutex m;
    };

    std::shared_ptr<Session> find(const std::string& id) const;
    void persist(const Session& s) const;
    Json session_view(const Session& s) const;

    std::filesystem::path dir_;
    OptimizerSpec fitSpec_;
    mutable std::mutex registry_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// HTTP front end. Routes:
///   POST /sessions                  body: design          -> 201 view
///   GET  /sessions                                        -> ids
///   POST /sessions/{id}/cohorts     body: cohort          -> view
///   GET  /sessions/{id}                                   -> view
///   GET  /sessions/{id}/transcript                        -> JSON lines
class HttpServer {
public:
    explicit HttpServer(ConductService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds (port 0 picks a free port) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace jcrm
