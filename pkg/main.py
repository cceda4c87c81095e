from src.main import cli, create_cli

__all__ = ["cli", "create_cli"]

if __name__ == "__main__":
    cli()
