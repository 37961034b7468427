//! Caption tokenisation, vocabulary and Word2Vec embeddings.

mod vocab;
mod word2vec;

pub use vocab::{
    encode_caption, tokenize, Tokenizer, Vocabulary, EOS, EOS_ID, PAD, PAD_ID, SOS, SOS_ID, UNK,
    UNK_ID,
};
pub use word2vec::{
    cosine, load_embedding_matrix, save_embedding_matrix, train_word2vec, EmbeddingMatrix,
    W2VConfig, WORD_DIM,
};

/// Longest caption (20 words) plus `<sos>` and `<eos>`.
pub const MAX_CAPTION_LEN: usize = 22;
