"""Built-in synthetic singing corpus."""
