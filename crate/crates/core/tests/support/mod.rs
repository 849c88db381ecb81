pub mod decoder_oracle;
pub mod fusion_oracle;
pub mod props;
