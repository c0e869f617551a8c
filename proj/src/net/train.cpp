#include "orsnn/net/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "orsnn/io/text.hpp"
#include "orsnn/tensor/init.hpp"

namespace orsnn {

TrainConfig TrainConfig::defaults_for(const std::string& dataset) {
    TrainConfig c;
    if (dataset == "mnist" || dataset == "fashion-mnist") {
        c.lr = 1e-2;
        c.steps = 16;
        c.batch_size = 128;
        c.epochs = 100;
    } else if (dataset == "dvs-gesture") {
        c.lr = 1e-4;
        c.steps = 32;
        c.batch_size = 32;
        c.epochs = 1000;
    } else if (dataset == "cifar10-dvs") {
        c.lr = 1e-3;
        c.steps = 16;
        c.batch_size = 128;
        c.epochs = 500;
    } else {
        fail(ErrorKind::InvalidArgument, "no defaults for dataset '" + dataset +
                                             "' (known: mnist, fashion-mnist, dvs-gesture, cifar10-dvs)");
    }
    if (dataset == "fashion-mnist" || dataset == "cifar10-dvs") {
        c.augment = parse_transforms("flip(0.5) translate(0.1) normalize(0.5,0.5)");
    }
    return c;
}

template <class Real>
Adam<Real>::Adam(std::vector<NamedTensor<Real>> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (lr < 0) fail(ErrorKind::InvalidArgument, "learning rate must be >= 0");
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor->size(), 0.0);
        v_.emplace_back(p.tensor->size(), 0.0);
    }
}

template <class Real>
void Adam<Real>::zero_grad() {
    for (auto& p : params_) p.tensor->zero_grad();
}

template <class Real>
void Adam<Real>::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor<Real>& p = *params_[i].tensor;
        if (!p.has_grad()) continue;
        auto w = p.mutable_values();
        const auto g = p.grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = g[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
            const double update = lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
            if (update != 0.0) w[j] = static_cast<Real>(w[j] - update);
        }
    }
}

namespace {

std::vector<std::size_t> range(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)));
        std::swap(v[i - 1], v[j]);
    }
}

template <class Real>
Tensor<Real> as_real(const Tensor<float>& x) {
    if constexpr (std::is_same_v<Real, float>) {
        return x;
    } else {
        std::vector<Real> v(x.values().begin(), x.values().end());
        return Tensor<Real>(x.shape(), std::move(v));
    }
}

template <class Real>
std::size_t correct(const Tensor<Real>& logits, const std::vector<std::int32_t>& labels) {
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (logits[i * k + j] > logits[i * k + best]) best = j;
        }
        hits += static_cast<std::int32_t>(best) == labels[i];
    }
    return hits;
}

}  // namespace

template <class Real>
EvalResult evaluate(Network<Real>& net, const Dataset& data, std::size_t steps, std::size_t batch_size) {
    if (data.size() == 0) fail(ErrorKind::EmptyDataset, "evaluation set '" + data.name + "' is empty");
    if (batch_size == 0) fail(ErrorKind::InvalidArgument, "batch size must be >= 1");
    EvalResult result;
    ForwardContext<Real> ctx;
    ctx.mode = NormMode::Infer;
    ctx.record = &result.record;
    double loss_sum = 0;
    std::size_t hits = 0;
    const auto order = range(data.size());
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(start + batch_size, data.size())));
        const auto labels = batch_labels(data, idx);
        net.reset_states();
        const Tensor<Real> logits = net.forward(as_real<Real>(make_batch(data, idx, steps)), ctx);
        loss_sum += static_cast<double>(cross_entropy(logits, labels).item()) * static_cast<double>(idx.size());
        hits += correct(logits, labels);
    }
    net.reset_states();
    result.samples = data.size();
    result.loss = loss_sum / static_cast<double>(data.size());
    result.accuracy = static_cast<double>(hits) / static_cast<double>(data.size());
    return result;
}

std::string TrainingLog::to_csv() const {
    std::ostringstream os;
    os << "epoch,loss,train_acc,test_acc,test_spikes,spikes_per_neuron,flagged\n";
    for (const auto& e : epochs) {
        std::string flagged;
        for (const auto& f : e.flagged) flagged += (flagged.empty() ? "" : ";") + f;
        os << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.train_accuracy) << ','
           << format_double(e.test_accuracy) << ',' << e.test_spikes << ',' << format_double(e.spikes_per_neuron) << ','
           << flagged << '\n';
    }
    return os.str();
}

template <class Real>
TrainingLog train(Network<Real>& net, const Dataset& train_set, const Dataset& test_set, const TrainConfig& cfg,
                  std::size_t first_epoch, const EpochCallback& on_epoch, FiringRateTrace trace) {
    if (train_set.size() == 0) fail(ErrorKind::EmptyDataset, "training set '" + train_set.name + "' is empty");
    if (cfg.optimizer != "adam") fail(ErrorKind::InvalidArgument, "unsupported optimizer '" + cfg.optimizer + "'");
    if (cfg.loss != "cross-entropy") fail(ErrorKind::InvalidArgument, "unsupported loss '" + cfg.loss + "'");
    if (cfg.batch_size == 0) fail(ErrorKind::InvalidArgument, "batch size must be >= 1");
    TrainingLog log;
    log.trace = std::move(trace);
    Adam<Real> opt(net.parameters(), cfg.lr);
    // The stream depends only on the seed and the epoch so a resumed run
    // sees the same batches as an uninterrupted one.
    const auto shortcuts = net.shortcut_names();
    for (std::size_t epoch = first_epoch; epoch < first_epoch + cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(cfg.seed * 1000003ULL + epoch);
        auto order = range(train_set.size());
        shuffle(order, rng);
        double loss_sum = 0;
        std::size_t hits = 0, batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(std::min(start + cfg.batch_size, order.size())));
            const auto labels = batch_labels(train_set, idx);
            const Tensor<Real> x = as_real<Real>(make_batch(train_set, idx, cfg.steps, cfg.augment, &rng));
            net.reset_states();
            opt.zero_grad();
            Tape<Real> tape;
            ForwardContext<Real> ctx;
            ctx.mode = NormMode::Train;
            const Tensor<Real> logits = net.forward(x, ctx);
            const Tensor<Real> loss = cross_entropy(logits, labels);
            const double l = static_cast<double>(loss.item());
            if (!std::isfinite(l)) {
                fail(ErrorKind::Divergence, "loss became " + format_double(l) + " at epoch " + std::to_string(epoch) +
                                                ", batch " + std::to_string(batch_index) + " (lr " + format_double(cfg.lr) + ")");
            }
            tape.backward(loss);
            opt.step();
            loss_sum += l * static_cast<double>(idx.size());
            hits += correct(logits, labels);
        }
        net.reset_states();

        EpochLog e;
        e.epoch = epoch;
        e.loss = loss_sum / static_cast<double>(train_set.size());
        e.train_accuracy = static_cast<double>(hits) / static_cast<double>(train_set.size());
        const EvalResult ev = evaluate(net, test_set, cfg.steps, cfg.batch_size);
        e.test_accuracy = ev.accuracy;
        e.test_spikes = spike_count(ev.record);
        e.spikes_per_neuron = mean_spikes_per_neuron(ev.record).per_window;
        std::map<std::string, double> rates;
        for (const auto& [name, fr] : firing_rates(ev.record)) rates[name] = fr.per_step;
        // Pruned shortcuts and their layers stay in the trace at rate 0.
        for (const auto& s : shortcuts) rates.try_emplace(s, 0.0);
        for (const auto& name : log.trace.layers()) rates.try_emplace(name, 0.0);
        log.trace.append(epoch, rates);
        if (log.trace.size() >= cfg.patience) e.flagged = detect_natural_pruning(log.trace, shortcuts, cfg.patience).flagged();
        e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.epochs.push_back(e);
        if (on_epoch) on_epoch(e, log);
    }
    return log;
}

template class Adam<float>;
template class Adam<double>;
template EvalResult evaluate(Network<float>&, const Dataset&, std::size_t, std::size_t);
template EvalResult evaluate(Network<double>&, const Dataset&, std::size_t, std::size_t);
template TrainingLog train(Network<float>&, const Dataset&, const Dataset&, const TrainConfig&, std::size_t,
                           const EpochCallback&, FiringRateTrace);
template TrainingLog train(Network<double>&, const Dataset&, const Dataset&, const TrainConfig&, std::size_t,
                           const EpochCallback&, FiringRateTrace);

}  // namespace orsnn
