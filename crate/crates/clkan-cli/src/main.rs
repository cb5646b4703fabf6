fn main() -> anyhow::Result<()> {
    clkan_cli::run()
}
