// Grader persistence through the named-tensor checkpoint container. Text
// payloads (config, vocabularies) are stored as byte-per-float entries so the
// container keeps its single fixed layout.

#include <map>
#include <sstream>

#include "engine.hpp"

namespace cdln {

namespace {

std::string join_lines(const std::vector<std::string>& items) {
    std::string out;
    for (const std::string& item : items) {
        out += item;
        out += '\n';
    }
    return out;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

}  // namespace

void Grader::save(const std::string& path) const {
    Checkpoint ckpt;
    ckpt.add_bytes("__meta__/model", kind_);
    ckpt.add_bytes("__meta__/config", cfg_.dump());

    if (neural_) {
        const std::vector<std::string>& tokens = neural_->vocab().tokens();
        std::vector<std::string> real_tokens(tokens.begin() + 2, tokens.end());
        ckpt.add_bytes("__meta__/vocab", join_lines(real_tokens));
        // parameters() is non-const by design (training mutates); snapshotting
        // values is read-only
        auto params = const_cast<NeuralGrader*>(neural_.get())->parameters();
        for (const Parameter* p : params) ckpt.add(p->name, p->value);
    } else if (svm_) {
        ckpt.add_bytes("__meta__/tfidf_vocab", join_lines(tfidf_.ordered_tokens));
        std::vector<double> df;
        df.reserve(tfidf_.ordered_tokens.size());
        for (const std::string& tok : tfidf_.ordered_tokens)
            df.push_back(static_cast<double>(tfidf_.df.at(tok)));
        if (!df.empty()) ckpt.add_doubles("svm/df", df);

        std::map<std::string, std::size_t> token_index;
        for (std::size_t i = 0; i < tfidf_.ordered_tokens.size(); ++i)
            token_index[tfidf_.ordered_tokens[i]] = i;

        const auto& vectors = svm_->support_vectors();
        std::vector<double> indptr{0.0}, index, value;
        for (const SparseVec& v : vectors) {
            for (const auto& [tok, w] : v.entries) {
                auto it = token_index.find(tok);
                if (it == token_index.end())
                    fail(errc::internal, "svm save: support vector token outside tfidf vocabulary");
                index.push_back(static_cast<double>(it->second));
                value.push_back(w);
            }
            indptr.push_back(static_cast<double>(index.size()));
        }
        ckpt.add_doubles("svm/vec/indptr", indptr);
        if (!index.empty()) {
            ckpt.add_doubles("svm/vec/index", index);
            ckpt.add_doubles("svm/vec/value", value);
        }

        const auto& labels = svm_->class_labels();
        std::vector<double> label_d(labels.begin(), labels.end());
        if (!label_d.empty()) ckpt.add_doubles("svm/labels", label_d);

        int fallback = svm_->degenerate() ? svm_->predict(SparseVec{}) : 0;
        ckpt.add_doubles("svm/meta",
                         {static_cast<double>(tfidf_.corpus_size), svm_->gamma(),
                          static_cast<double>(fallback),
                          static_cast<double>(svm_->machines().size()),
                          static_cast<double>(vectors.size())});

        for (std::size_t m = 0; m < svm_->machines().size(); ++m) {
            const BinarySvm& machine = svm_->machines()[m];
            const std::string base = "svm/m" + std::to_string(m);
            ckpt.add_doubles(base + "/meta",
                             {machine.bias, static_cast<double>(machine.sv.size())});
            if (!machine.sv.empty()) {
                std::vector<double> sv_d;
                for (std::size_t idx : machine.sv) sv_d.push_back(static_cast<double>(idx));
                ckpt.add_doubles(base + "/sv", sv_d);
                ckpt.add_doubles(base + "/coeff", machine.coeff);
            }
        }
    } else {
        fail(errc::contract, "save: grader holds no model");
    }
    ckpt.save(path);
}

Grader Grader::load(const std::string& path) {
    Checkpoint ckpt = Checkpoint::load(path);

    Grader g;
    g.kind_ = ckpt.bytes("__meta__/model");
    g.cfg_ = RunConfig{};
    g.cfg_.load_text(ckpt.bytes("__meta__/config"), path + " (embedded config)");

    if (g.kind_ == "svm") {
        TfidfModel model;
        model.ordered_tokens = split_lines(ckpt.bytes("__meta__/tfidf_vocab"));
        std::vector<double> df =
            model.ordered_tokens.empty() ? std::vector<double>{} : ckpt.doubles("svm/df");
        if (df.size() != model.ordered_tokens.size())
            fail(errc::format, path + ": svm/df length does not match vocabulary");
        for (std::size_t i = 0; i < df.size(); ++i)
            model.df[model.ordered_tokens[i]] = static_cast<std::size_t>(df[i]);

        std::vector<double> meta = ckpt.doubles("svm/meta");
        if (meta.size() != 5) fail(errc::format, path + ": svm/meta malformed");
        model.corpus_size = static_cast<std::size_t>(meta[0]);
        const double gamma = meta[1];
        const int fallback = static_cast<int>(meta[2]);
        const std::size_t n_machines = static_cast<std::size_t>(meta[3]);
        const std::size_t n_vectors = static_cast<std::size_t>(meta[4]);

        std::vector<double> indptr = ckpt.doubles("svm/vec/indptr");
        if (indptr.size() != n_vectors + 1)
            fail(errc::format, path + ": svm/vec/indptr length mismatch");
        std::vector<double> index, value;
        if (n_vectors > 0 && indptr.back() > 0) {
            index = ckpt.doubles("svm/vec/index");
            value = ckpt.doubles("svm/vec/value");
        }
        std::vector<SparseVec> vectors(n_vectors);
        for (std::size_t v = 0; v < n_vectors; ++v) {
            const std::size_t lo = static_cast<std::size_t>(indptr[v]);
            const std::size_t hi = static_cast<std::size_t>(indptr[v + 1]);
            for (std::size_t k = lo; k < hi; ++k) {
                const std::size_t tok_idx = static_cast<std::size_t>(index[k]);
                if (tok_idx >= model.ordered_tokens.size())
                    fail(errc::format, path + ": svm support vector index out of range");
                vectors[v].entries.emplace_back(model.ordered_tokens[tok_idx], value[k]);
            }
        }

        std::vector<int> labels;
        if (n_machines > 0) {
            for (double d : ckpt.doubles("svm/labels")) labels.push_back(static_cast<int>(d));
            if (labels.size() != n_machines)
                fail(errc::format, path + ": svm/labels length mismatch");
        }
        std::vector<BinarySvm> machines;
        for (std::size_t m = 0; m < n_machines; ++m) {
            const std::string base = "svm/m" + std::to_string(m);
            std::vector<double> mmeta = ckpt.doubles(base + "/meta");
            if (mmeta.size() != 2) fail(errc::format, path + ": " + base + "/meta malformed");
            BinarySvm machine;
            machine.bias = mmeta[0];
            const std::size_t sv_count = static_cast<std::size_t>(mmeta[1]);
            if (sv_count > 0) {
                for (double d : ckpt.doubles(base + "/sv"))
                    machine.sv.push_back(static_cast<std::size_t>(d));
                machine.coeff = ckpt.doubles(base + "/coeff");
                if (machine.sv.size() != sv_count || machine.coeff.size() != sv_count)
                    fail(errc::format, path + ": " + base + " support vector arrays mismatch");
            }
            machines.push_back(std::move(machine));
        }

        g.tfidf_ = std::move(model);
        g.svm_ = std::make_unique<SvmModel>(SvmModel::assemble(
            std::move(vectors), std::move(labels), std::move(machines), gamma, fallback));
        return g;
    }

    Vocabulary vocab = Vocabulary::from_ordered_tokens(split_lines(ckpt.bytes("__meta__/vocab")));
    g.neural_ = make_neural_grader(g.kind_, g.cfg_, std::move(vocab));
    for (Parameter* p : g.neural_->parameters()) {
        Tensor stored = ckpt.tensor(p->name);
        if (stored.shape() != p->value.shape())
            fail(errc::format, path + ": parameter '" + p->name + "' has shape " +
                                   stored.shape_str() + ", expected " + p->value.shape_str());
        p->value = std::move(stored);
        p->zero_grad();
    }
    return g;
}

}  // namespace cdln
